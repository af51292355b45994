"""
Glottal closure instant detection and the quasi-closed phase (QCP) weighting
used by weighted forward-backward LP.
"""
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.ndimage
import scipy.signal

from .exceptions import SignalError, WeightError
from .lp import ENERGY_FLOOR, lp_cov, weighted_lp_fb
from .signal import require_analysis_rate

MIN_F0 = 60.0
MAX_F0 = 400.0
MAX_PERIOD_MS = 20.0
RESIDUAL_ORDER = 10
RESIDUAL_BLOCK = 80
SNAP_MS = 1.0


@dataclass(frozen=True)
class GciList:
    """Ascending sample indices of glottal closure instants."""
    instants: np.ndarray

    def __post_init__(self):
        instants = np.asarray(self.instants, dtype=np.int64).reshape(-1)
        if len(instants) and (instants[0] < 0 or np.any(np.diff(instants) <= 0)):
            raise SignalError("GCI instants need to be nonnegative and strictly increasing.")
        instants.setflags(write=False)
        object.__setattr__(self, 'instants', instants)

    def __len__(self):
        return len(self.instants)

    @classmethod
    def empty(cls):
        return cls(np.empty(0, dtype=np.int64))

    def check_bounds(self, n_samples):
        if len(self.instants) and self.instants[-1] >= n_samples:
            raise SignalError(
                f"GCI at sample {self.instants[-1]} lies outside a signal of {n_samples} samples."
            )


@dataclass(frozen=True)
class QcpParams:
    ramp_duration_ms: float = 0.7
    position_quotient: float = 0.05
    duration_quotient: float = 0.7
    d_min: float = 1e-5

    def __post_init__(self):
        if not 0 <= self.position_quotient < 1:
            raise WeightError(f"Position quotient needs to be in [0, 1), got {self.position_quotient}.")
        if not 0 < self.duration_quotient <= 1:
            raise WeightError(f"Duration quotient needs to be in (0, 1], got {self.duration_quotient}.")
        if not 0 < self.d_min <= 1:
            raise WeightError(f"d_min needs to be in (0, 1], got {self.d_min}.")
        if self.ramp_duration_ms < 0:
            raise WeightError(f"Ramp duration can't be negative, got {self.ramp_duration_ms}.")

    def ramp_samples(self, sample_rate):
        return int(round(self.ramp_duration_ms * sample_rate / 1000))


@dataclass(frozen=True)
class WeightFunction:
    """One weight per frame sample, in [d_min, 1]."""
    values: np.ndarray

    def __len__(self):
        return len(self.values)


# ============================
# =====  GCI detection  ======
# ============================

def estimate_pitch_period(samples, sample_rate, min_f0=MIN_F0, max_f0=MAX_F0):
    """Average pitch period in samples, from the biased autocorrelation of the whole signal."""
    correlation = scipy.signal.correlate(samples, samples, mode='full', method='fft')
    correlation = correlation[len(samples) - 1:]
    shortest = int(sample_rate / max_f0)
    longest = min(int(sample_rate / min_f0), len(samples) - 1)
    if longest <= shortest:
        return sample_rate / 120.0
    return float(shortest + np.argmax(correlation[shortest:longest + 1]))


def zero_frequency_filter(samples, window):
    """
    Differenced signal through two zero-frequency resonators (double
    integrators), followed by three passes of local mean subtraction over
    `window` samples.
    """
    differenced = np.diff(samples, prepend=samples[0])
    filtered = scipy.signal.lfilter([1.0], [1.0, -2.0, 1.0], differenced)
    filtered = scipy.signal.lfilter([1.0], [1.0, -2.0, 1.0], filtered)
    for _ in range(3):
        filtered = filtered - scipy.ndimage.uniform_filter1d(filtered, size=window, mode='nearest')
    return filtered


def _zero_crossings(zff):
    """Positive-going zero crossings and the slope across each."""
    candidates = np.flatnonzero((zff[:-1] < 0) & (zff[1:] >= 0))
    # pick whichever of the two straddling samples sits closer to zero
    closer_right = np.abs(zff[candidates + 1]) <= np.abs(zff[candidates])
    instants = candidates + closer_right
    slopes = zff[candidates + 1] - zff[candidates]
    return instants, slopes


def _thin(instants, slopes, min_distance):
    """Of two instants closer than `min_distance`, keeps the steeper one."""
    kept, kept_slopes = [], []
    for instant, slope in zip(instants, slopes):
        if kept and instant - kept[-1] < min_distance:
            if slope > kept_slopes[-1]:
                kept[-1], kept_slopes[-1] = instant, slope
            continue
        kept.append(instant)
        kept_slopes.append(slope)
    return np.array(kept, dtype=np.int64)


def lp_residual(samples, order=RESIDUAL_ORDER, block=RESIDUAL_BLOCK, context=RESIDUAL_BLOCK):
    """
    Prediction error of a covariance LP fit that is renewed every `block`
    samples. Each fit sees the block plus `context` samples on either side;
    the inverse filter runs over the block with its true history.
    """
    samples = np.asarray(samples, dtype=np.float64)
    n_samples = len(samples)
    residual = np.zeros(n_samples)
    for start in range(0, n_samples, block):
        stop = min(start + block, n_samples)
        low, high = max(0, start - context), min(n_samples, stop + context)
        if high - low <= 2 * order:
            continue
        model = lp_cov(samples[low:high], order)
        history = max(0, start - order)
        error = scipy.signal.lfilter(model.polynomial, [1.0], samples[history:stop])
        residual[start:stop] = error[start - history:]
    return residual


def _snap_to_residual_peaks(instants, residual, radius):
    """Moves every instant to the largest residual magnitude within `radius` samples."""
    magnitude = np.abs(residual)
    snapped = np.empty(len(instants), dtype=np.int64)
    for i, instant in enumerate(instants):
        low, high = max(0, instant - radius), min(len(magnitude), instant + radius + 1)
        snapped[i] = low + int(np.argmax(magnitude[low:high]))
    return snapped


def detect_gci(x, window_periods=1.5, voicing_floor_db=-25.0, snap_ms=SNAP_MS):
    """
    Zero-frequency-filter GCI detector.

    The trend removal window is `window_periods` times the average pitch
    period. GCIs are the positive-going zero crossings of the filtered
    signal, each moved to the strongest LP residual sample within `snap_ms`
    to take out the filter's phase lag. Crossings near the signal edges,
    where the trend removal is unreliable, and crossings where the local
    signal power is more than `voicing_floor_db` below the loudest part of
    the signal are dropped.
    """
    require_analysis_rate(x)
    samples = x.samples - np.mean(x.samples) if len(x) else x.samples
    if len(samples) < 3 or float(np.dot(samples, samples)) < ENERGY_FLOOR:
        return GciList.empty()

    period = estimate_pitch_period(samples, x.sample_rate)
    window = max(3, int(round(window_periods * period)) | 1)
    zff = zero_frequency_filter(samples, window)
    instants, slopes = _zero_crossings(zff)

    guard = 2 * window
    inside = (instants >= guard) & (instants < len(samples) - guard)

    local_power = scipy.ndimage.uniform_filter1d(samples ** 2, size=window, mode='nearest')
    floor = np.max(local_power) * 10 ** (voicing_floor_db / 10)
    voiced = local_power[np.minimum(instants, len(samples) - 1)] >= floor

    keep = inside & voiced
    instants, slopes = instants[keep], slopes[keep]
    radius = int(round(snap_ms * x.sample_rate / 1000))
    if radius > 0 and len(instants):
        instants = _snap_to_residual_peaks(instants, lp_residual(samples), radius)
        order = np.argsort(instants, kind='stable')
        instants, slopes = instants[order], slopes[order]
    min_distance = int(x.sample_rate / MAX_F0)
    return GciList(_thin(instants, slopes, min_distance))


def read_gci_file(path, n_samples=None):
    """One sample index per line, ascending. Blank lines and '#' comments are ignored."""
    instants = []
    with Path(path).open() as gci_file:
        for line_no, line in enumerate(gci_file, start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            try:
                instants.append(int(line))
            except ValueError:
                raise SignalError(f"{path}:{line_no}: expected a sample index, got {line!r}.")
    gcis = GciList(np.array(instants, dtype=np.int64))
    if n_samples is not None:
        gcis.check_bounds(n_samples)
    return gcis


def write_gci_file(gci_file, gcis):
    for instant in gcis.instants:
        gci_file.write(f"{int(instant)}\n")


# ============================
# =====  QCP weighting  ======
# ============================

def glottal_periods(gcis, sample_rate, max_period_ms=MAX_PERIOD_MS):
    """
    (start, length) of every glottal period. An interval longer than
    `max_period_ms` is a voicing break, not a period. The last GCI of a voiced
    run borrows the preceding interval, and the first GCI of a run gets a
    period in front of it borrowing the following interval, so both edges of
    a run have their GCI neighbourhood covered. A GCI with no neighbour
    within reach contributes nothing.
    """
    instants = gcis.instants
    if len(instants) < 2:
        return []

    intervals = np.diff(instants)
    valid = intervals <= max_period_ms * sample_rate / 1000
    periods = []
    for i, instant in enumerate(instants):
        previous_ok = i > 0 and valid[i - 1]
        next_ok = i < len(intervals) and valid[i]
        if next_ok:
            periods.append((int(instant), int(intervals[i])))
            if not previous_ok:
                periods.append((int(instant - intervals[i]), int(intervals[i])))
        elif previous_ok:
            periods.append((int(instant), int(intervals[i - 1])))
    return sorted(periods)


def period_weights(length, params, ramp):
    """
    Weights over one glottal period of `length` samples starting at its GCI:
    1 on the quasi-closed phase [PQ*T, (PQ+DQ)*T) with `ramp`-sample linear
    ramps inside both edges, d_min elsewhere.
    """
    weights = np.full(length, params.d_min)
    start = int(round(params.position_quotient * length))
    stop = min(int(round((params.position_quotient + params.duration_quotient) * length)), length)
    if stop <= start:
        return weights

    weights[start:stop] = 1.0
    n_ramp = min(ramp, (stop - start) // 2)
    if n_ramp > 0:
        steps = np.arange(1, n_ramp + 1) / (n_ramp + 1)
        weights[start:start + n_ramp] = params.d_min + (1 - params.d_min) * steps
        weights[stop - n_ramp:stop] = params.d_min + (1 - params.d_min) * steps[::-1]
    return weights


def build_qcp_weights(frame_range, gcis, params, sample_rate, periods=None):
    """
    QCP weights for the frame covering the utterance samples `frame_range`.
    Samples not covered by any glottal period keep weight 1, so a frame with
    no GCIs around it reduces to plain forward-backward LP.
    :param periods: precomputed `glottal_periods(gcis, sample_rate)`
    """
    start, stop = frame_range.start, frame_range.stop
    values = np.ones(stop - start)
    if params.d_min >= 1:
        return WeightFunction(values)

    if periods is None:
        periods = glottal_periods(gcis, sample_rate)
    ramp = params.ramp_samples(sample_rate)
    for period_start, length in periods:
        if period_start >= stop:
            break
        if period_start + length <= start:
            continue
        lo = max(period_start, start)
        hi = min(period_start + length, stop)
        weights = period_weights(length, params, ramp)
        values[lo - start:hi - start] = weights[lo - period_start:hi - period_start]
    return WeightFunction(values)


def qcp_fb(frame, order, weights):
    """QCP-weighted forward-backward LP; the residual is the attained weighted error."""
    return weighted_lp_fb(frame, order, weights.values)
