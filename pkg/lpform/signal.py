"""
Audio carrier, WAV I/O, pre-emphasis, framing and the synthetic vowel
generator that the rest of the package is verified against.
"""
from dataclasses import dataclass

import numpy as np
import scipy.signal
import soundfile

from .exceptions import SignalError

ANALYSIS_RATE = 8000
PREEMPHASIS = 0.97
SYNTH_RMS = 0.1
SOURCE_POLE = 0.9
PCM_SCALE = 32768.0


@dataclass(frozen=True)
class SignalBuffer:
    """Mono samples (dimensionless, nominally in [-1, 1)) and their sample rate in Hz."""
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise SignalError(f"Expected mono samples, got an array of shape {samples.shape}.")
        if not np.all(np.isfinite(samples)):
            raise SignalError("Signal contains NaN or infinite samples.")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise SignalError(f"Sample rate needs to be a positive integer, got {self.sample_rate}.")
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)
        object.__setattr__(self, 'sample_rate', int(self.sample_rate))

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate

    def power(self):
        """Mean square over the whole buffer."""
        if not len(self.samples):
            return 0.0
        return float(np.mean(self.samples ** 2))

    def with_samples(self, samples):
        return SignalBuffer(samples, self.sample_rate)


def require_analysis_rate(x):
    if x.sample_rate != ANALYSIS_RATE:
        raise SignalError(
            f"Analysis runs at {ANALYSIS_RATE} Hz, got a signal at {x.sample_rate} Hz. "
            f"Resample the audio to {ANALYSIS_RATE} Hz first (e.g. with sox)."
        )


def read_wav(path):
    """
    Reads a 16-bit PCM mono WAV file. Integer samples are scaled to [-1, 1)
    by a division by 32768.
    """
    try:
        info = soundfile.info(str(path))
    except RuntimeError as e:
        raise SignalError(f"Unable to read {path}: {e}")
    if info.channels != 1:
        raise SignalError(f"{path}: expected mono audio, got {info.channels} channels.")
    if info.subtype != 'PCM_16':
        raise SignalError(f"{path}: expected 16-bit PCM, got {info.subtype}.")

    data, sample_rate = soundfile.read(str(path), dtype='int16')
    return SignalBuffer(data.astype(np.float64) / PCM_SCALE, sample_rate)


def write_wav(path, x):
    """
    Writes `x` as 16-bit PCM mono WAV.
    :return: number of samples that had to be clipped
    """
    scaled = np.round(x.samples * PCM_SCALE)
    clipped = int(np.count_nonzero((scaled < -32768) | (scaled > 32767)))
    pcm = np.clip(scaled, -32768, 32767).astype(np.int16)
    soundfile.write(str(path), pcm, x.sample_rate, subtype='PCM_16', format='WAV')
    return clipped


def preemphasize(x, coefficient=PREEMPHASIS):
    """
    First-order FIR pre-emphasis P(z) = 1 - coefficient * z^-1 with a zero
    sample before the start, so y[0] = x[0].
    """
    if not len(x):
        raise SignalError("Cannot pre-emphasize an empty signal.")
    return x.with_samples(scipy.signal.lfilter([1.0, -coefficient], [1.0], x.samples))


@dataclass(frozen=True)
class FrameSpec:
    length_ms: float = 25.0
    shift_ms: float = 10.0

    def __post_init__(self):
        if not 0 < self.shift_ms <= self.length_ms:
            raise SignalError(
                f"Frame shift needs to be in (0, frame length], got shift {self.shift_ms} ms "
                f"and length {self.length_ms} ms."
            )

    def length_samples(self, sample_rate):
        return int(round(self.length_ms * sample_rate / 1000))

    def shift_samples(self, sample_rate):
        return int(round(self.shift_ms * sample_rate / 1000))

    def frame_count(self, n_samples, sample_rate):
        length = self.length_samples(sample_rate)
        if n_samples < length:
            return 0
        return (n_samples - length) // self.shift_samples(sample_rate) + 1


@dataclass(frozen=True)
class Frames:
    """
    Rectangular analysis frames. Row k of `windows` covers samples
    [starts[k], starts[k] + length) of the framed signal, `times` are the frame
    centres in seconds.
    """
    windows: np.ndarray
    starts: np.ndarray
    times: np.ndarray
    sample_rate: int
    length: int

    def __len__(self):
        return len(self.starts)

    def sample_range(self, k):
        return range(int(self.starts[k]), int(self.starts[k]) + self.length)


def frame_signal(x, spec):
    length = spec.length_samples(x.sample_rate)
    shift = spec.shift_samples(x.sample_rate)
    count = spec.frame_count(len(x), x.sample_rate)
    if count == 0:
        return Frames(
            windows=np.empty((0, length)),
            starts=np.empty(0, dtype=np.int64),
            times=np.empty(0),
            sample_rate=x.sample_rate,
            length=length,
        )

    windows = np.lib.stride_tricks.sliding_window_view(x.samples, length)[::shift][:count]
    starts = np.arange(count, dtype=np.int64) * shift
    times = (starts + length / 2) / x.sample_rate
    return Frames(windows=windows, starts=starts, times=times,
                  sample_rate=x.sample_rate, length=length)


# ============================
# =====   Synthesis     ======
# ============================

@dataclass(frozen=True)
class SynthSpec:
    f0: float
    formants: tuple
    duration_s: float
    sample_rate: int = ANALYSIS_RATE
    source_pole: float = 0.0

    def __post_init__(self):
        formants = tuple((float(f), float(b)) for f, b in self.formants)
        object.__setattr__(self, 'formants', formants)
        if self.f0 <= 0:
            raise SignalError(f"f0 needs to be positive, got {self.f0}.")
        if self.duration_s <= 0:
            raise SignalError(f"Duration needs to be positive, got {self.duration_s}.")
        nyquist = self.sample_rate / 2
        for frequency, bandwidth in formants:
            if not 0 < frequency < nyquist:
                raise SignalError(
                    f"Formant {frequency} Hz is not below the Nyquist frequency {nyquist} Hz."
                )
            if bandwidth <= 0:
                raise SignalError(f"Bandwidths need to be positive, got {bandwidth} Hz.")
        if not 0 <= self.source_pole < 1:
            raise SignalError(f"Source pole needs to be in [0, 1), got {self.source_pole}.")

    @property
    def n_samples(self):
        return int(round(self.duration_s * self.sample_rate))


def resonator_sos(formants, sample_rate):
    """
    Second-order sections of a resonator cascade, one section per
    (frequency, bandwidth) pair. Poles sit at radius exp(-pi B / fs) and angle
    2 pi F / fs; every section has unity gain at DC.
    """
    sections = []
    for frequency, bandwidth in formants:
        radius = np.exp(-np.pi * bandwidth / sample_rate)
        theta = 2 * np.pi * frequency / sample_rate
        a1 = -2 * radius * np.cos(theta)
        a2 = radius ** 2
        sections.append([1 + a1 + a2, 0.0, 0.0, 1.0, a1, a2])
    return np.array(sections, dtype=np.float64).reshape(-1, 6)


def glottal_pulse_positions(f0, n_samples, sample_rate, seed):
    """
    Sample indices of an impulse train at `f0`, starting at a seeded random
    phase within the first period.
    """
    rng = np.random.default_rng(seed)
    period = sample_rate / f0
    offset = rng.uniform(0, period)
    count = int(np.ceil((n_samples - offset) / period)) + 1
    positions = np.round(offset + period * np.arange(count)).astype(np.int64)
    return positions[positions < n_samples]


def glottal_excitation(pulses, n_samples, pole=0.0):
    """
    Negative-going unit impulses at `pulses`, optionally through a one-pole
    low-pass. A pole of 0.9 tilts the source by -6 dB/octave above roughly
    130 Hz, which pre-emphasis takes out again, while the pulse onsets stay
    sharp. A pole of 0 leaves the bare impulse train.
    """
    excitation = np.zeros(n_samples)
    excitation[pulses] = -1.0
    if pole == 0:
        return excitation
    return scipy.signal.lfilter([1.0], [1.0, -pole], excitation)


def filter_through_resonators(excitation, frequencies, bandwidths, sample_rate, block_size=8):
    """
    Runs `excitation` through a resonator cascade whose formants may move.
    :param frequencies: (n_formants,) for a static cascade, or
        (n_samples, n_formants) per-sample trajectories
    :param bandwidths: same shape as frequencies
    :param block_size: coefficient update interval for moving formants
    """
    frequencies = np.asarray(frequencies, dtype=np.float64)
    bandwidths = np.asarray(bandwidths, dtype=np.float64)
    if frequencies.ndim == 1:
        sos = resonator_sos(zip(frequencies, bandwidths), sample_rate)
        return scipy.signal.sosfilt(sos, excitation)

    output = np.empty(len(excitation))
    state = np.zeros((frequencies.shape[1], 2))
    for start in range(0, len(excitation), block_size):
        stop = min(start + block_size, len(excitation))
        sos = resonator_sos(zip(frequencies[start], bandwidths[start]), sample_rate)
        output[start:stop], state = scipy.signal.sosfilt(sos, excitation[start:stop], zi=state)
    return output


def rms_normalize(samples, target=SYNTH_RMS):
    rms = np.sqrt(np.mean(samples ** 2))
    if rms == 0:
        return samples
    return samples * (target / rms)


def synthesize_vowel(spec, seed=0):
    """
    A static vowel: negative-going impulse train at f0 (the polarity of a
    differentiated glottal flow), tilted by `spec.source_pole`, through the
    resonator cascade of `spec.formants`, normalized to an RMS of 0.1.
    """
    n_samples = spec.n_samples
    pulses = glottal_pulse_positions(spec.f0, n_samples, spec.sample_rate, seed)
    excitation = glottal_excitation(pulses, n_samples, spec.source_pole)

    frequencies = [f for f, _ in spec.formants]
    bandwidths = [b for _, b in spec.formants]
    samples = filter_through_resonators(excitation, frequencies, bandwidths, spec.sample_rate)
    return SignalBuffer(rms_normalize(samples), spec.sample_rate)
