"""
Frame-wise refinement of externally predicted formant tracks: every
predicted formant is replaced by the all-pole spectral peak closest to it.
"""
import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import GridMismatchError
from .formant_track import FormantTrack, N_FORMANTS
from .qcp import QcpParams, build_qcp_weights, detect_gci, glottal_periods
from .signal import FrameSpec, PREEMPHASIS, frame_signal, preemphasize, require_analysis_rate
from .spectrum import (
    GRID_SIZE, METHOD_QCP_FB, METHODS, PEAK_WIDTH_HZ, SCALE_DB, SCALE_LINEAR, fit_model,
    peaks_from_model,
)

ALIGN_OFFSET_MS = 12.5


@dataclass(frozen=True)
class AnalysisSettings:
    method: str = METHOD_QCP_FB
    order: int = 13
    frame: FrameSpec = field(default_factory=FrameSpec)
    preemph: float = PREEMPHASIS
    qcp: QcpParams = field(default_factory=QcpParams)
    grid_size: int = GRID_SIZE
    peak_width_hz: float = PEAK_WIDTH_HZ
    peak_scale: str = SCALE_DB
    align_offset_ms: float = ALIGN_OFFSET_MS
    threads: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"Unknown method {self.method!r}, expected one of {', '.join(METHODS)}")
        if self.peak_scale not in (SCALE_DB, SCALE_LINEAR):
            raise ValueError(f"Unknown peak scale {self.peak_scale!r}, expected {SCALE_DB} or {SCALE_LINEAR}")

    def replace(self, **overrides):
        return dataclasses.replace(self, **overrides)

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class PeakTrack:
    """
    Per-frame peak lists on the analysis grid, timestamped like the tracks
    written for it. `spectra` is only filled when asked for.
    """
    times: np.ndarray
    peaks: tuple
    degenerate: int = 0
    clamped: int = 0
    spectra: tuple = None

    def __len__(self):
        return len(self.peaks)

    def head(self, n_frames):
        spectra = None if self.spectra is None else self.spectra[:n_frames]
        return PeakTrack(self.times[:n_frames], self.peaks[:n_frames],
                         self.degenerate, self.clamped, spectra)


def track_times(frames, align_offset_ms):
    # +0.0 turns -0.0 into 0.0
    return np.round(frames.times - align_offset_ms / 1000, 9) + 0.0


def compute_peak_track(audio, settings=AnalysisSettings(), gcis=None, keep_spectra=False):
    """
    Pre-emphasis, framing and per-frame peak picking over a whole utterance.
    For qcp-fb the GCIs come from `gcis` when given, otherwise from the
    built-in detector run on the signal before pre-emphasis. Frames are
    analysed in parallel when `settings.threads` > 1; the result does not
    depend on the thread count.
    """
    require_analysis_rate(audio)
    emphasized = preemphasize(audio, settings.preemph)
    frames = frame_signal(emphasized, settings.frame)
    sample_rate = audio.sample_rate

    periods = None
    if settings.method == METHOD_QCP_FB:
        if gcis is None:
            gcis = detect_gci(audio)
        gcis.check_bounds(len(audio))
        periods = glottal_periods(gcis, sample_rate)

    def analyze(k):
        weights = None
        if periods is not None:
            weights = build_qcp_weights(frames.sample_range(k), gcis, settings.qcp,
                                        sample_rate, periods)
        model = fit_model(frames.windows[k], settings.method, settings.order, weights)
        peaks, spectrum = peaks_from_model(
            model, sample_rate, settings.grid_size, settings.peak_width_hz, settings.peak_scale,
        )
        return model.degenerate, peaks, spectrum

    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            results = list(pool.map(analyze, range(len(frames))))
    else:
        results = [analyze(k) for k in range(len(frames))]

    spectra = tuple(spectrum for _, _, spectrum in results)
    return PeakTrack(
        times=track_times(frames, settings.align_offset_ms),
        peaks=tuple(peaks for _, peaks, _ in results),
        degenerate=sum(1 for degenerate, _, _ in results if degenerate),
        clamped=sum(1 for spectrum in spectra if spectrum is not None and spectrum.clamped),
        spectra=spectra if keep_spectra else None,
    )


def estimate_track(peak_track):
    """The lowest three peaks of every frame as F1..F3; frames with fewer peaks are invalid."""
    formants = np.zeros((len(peak_track), N_FORMANTS))
    valid = np.zeros(len(peak_track), dtype=bool)
    for k, peaks in enumerate(peak_track.peaks):
        if len(peaks) >= N_FORMANTS:
            formants[k] = peaks.frequencies[:N_FORMANTS]
            valid[k] = True
    return FormantTrack(peak_track.times, formants, valid)


def refine_frame(predicted, peaks):
    """
    Each predicted formant independently becomes its nearest peak (absolute
    Hz distance); with no peaks the prediction passes through.
    """
    if not len(peaks):
        return tuple(float(f) for f in predicted)
    frequencies = peaks.frequencies
    return tuple(float(frequencies[np.argmin(np.abs(frequencies - f))]) for f in predicted)


def refine_with_peaks(predicted, peak_track):
    if len(predicted) != len(peak_track):
        raise GridMismatchError(
            "Predicted track does not match the analysis grid of the audio",
            expected=len(peak_track),
            got=len(predicted),
        )

    formants = np.array(predicted.formants)
    for k in np.flatnonzero(predicted.valid):
        formants[k] = refine_frame(predicted.formants[k], peak_track.peaks[k])
    return predicted.copy(formants=formants)


def refine_track(predicted, audio, settings=AnalysisSettings(), gcis=None):
    """Refines `predicted` with the peaks of `audio` analysed with `settings`."""
    return refine_with_peaks(predicted, compute_peak_track(audio, settings, gcis))


def collision_count(track):
    """Valid frames where two formants landed on the same value."""
    f = track.formants[track.valid]
    same = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
    return int(np.count_nonzero(same))


def ordering_violations(track):
    """Valid frames where F1 < F2 < F3 does not hold."""
    f = track.formants[track.valid]
    ordered = (f[:, 0] < f[:, 1]) & (f[:, 1] < f[:, 2])
    return int(np.count_nonzero(~ordered))
