"""
All-pole power spectra and their local peaks.
"""
from dataclasses import dataclass

import numpy as np
import scipy.ndimage

from .helpers import format_sig, format_time
from .lp import lp_cov, lp_fb
from .qcp import qcp_fb

GRID_SIZE = 2049
PEAK_WIDTH_HZ = 100.0
EDGE_GUARD_HZ = 50.0
CLAMP = 1e12
KERNEL_TRUNCATE = 3.0

METHOD_LP_COV = 'lp-cov'
METHOD_QCP_FB = 'qcp-fb'
METHODS = (METHOD_LP_COV, METHOD_QCP_FB)

SCALE_DB = 'db'
SCALE_LINEAR = 'linear'


@dataclass(frozen=True)
class PowerSpectrum:
    """
    1 / |A(e^jw)|^2 on a uniform one-sided grid [0, fs/2] of `grid_size`
    bins. `clamped` marks spectra where A vanished on a grid point.
    """
    values: np.ndarray
    sample_rate: int
    order: int
    clamped: bool = False

    @property
    def grid_size(self):
        return len(self.values)

    @property
    def bin_width(self):
        return self.sample_rate / 2 / (self.grid_size - 1)

    @property
    def frequencies(self):
        return np.linspace(0, self.sample_rate / 2, self.grid_size)

    def to_db(self):
        return 10 * np.log10(self.values)


@dataclass(frozen=True)
class PeakList:
    """Ascending peak frequencies in Hz."""
    frequencies: np.ndarray

    def __post_init__(self):
        frequencies = np.sort(np.asarray(self.frequencies, dtype=np.float64).reshape(-1))
        frequencies.setflags(write=False)
        object.__setattr__(self, 'frequencies', frequencies)

    def __len__(self):
        return len(self.frequencies)

    @classmethod
    def empty(cls):
        return cls(np.empty(0))


def _is_power_of_two(value):
    return value > 0 and value & (value - 1) == 0


def allpole_power_spectrum(model, grid_size=GRID_SIZE, sample_rate=8000):
    if grid_size < 2 or not _is_power_of_two(grid_size - 1):
        raise ValueError(f"Grid size needs to be a power of two plus one, got {grid_size}.")

    n_fft = 2 * (grid_size - 1)
    response = np.fft.rfft(model.polynomial, n=n_fft)
    magnitude = response.real ** 2 + response.imag ** 2
    vanishing = magnitude < 1 / CLAMP
    values = np.empty(grid_size)
    values[~vanishing] = 1 / magnitude[~vanishing]
    values[vanishing] = CLAMP
    return PowerSpectrum(values, sample_rate, model.order, clamped=bool(np.any(vanishing)))


def smoothed_derivative(spectrum, width_hz=PEAK_WIDTH_HZ, scale=SCALE_DB):
    """
    The spectrum (in dB or linear power) convolved with the derivative of a
    Gaussian whose standard deviation is half of `width_hz`, truncated at
    three standard deviations, with reflected edges.
    """
    values = spectrum.to_db() if scale == SCALE_DB else spectrum.values
    sigma = (width_hz / 2) / spectrum.bin_width
    return scipy.ndimage.gaussian_filter1d(
        values, sigma, order=1, mode='reflect', truncate=KERNEL_TRUNCATE,
    )


def smoothed_spectrum(spectrum, width_hz=PEAK_WIDTH_HZ, scale=SCALE_DB):
    values = spectrum.to_db() if scale == SCALE_DB else spectrum.values
    sigma = (width_hz / 2) / spectrum.bin_width
    return scipy.ndimage.gaussian_filter1d(
        values, sigma, order=0, mode='reflect', truncate=KERNEL_TRUNCATE,
    )


def pick_peaks(spectrum, width_hz=PEAK_WIDTH_HZ, scale=SCALE_DB, edge_guard_hz=EDGE_GUARD_HZ):
    """
    Local peaks as the positive-to-negative zero crossings of the
    Gaussian-derivative smoothed spectrum, placed by linear interpolation
    between the two straddling bins. Peaks within `edge_guard_hz` of 0 or
    fs/2 are dropped. At most floor(order / 2) peaks are kept, the most
    prominent ones in the smoothed spectrum.
    """
    derivative = smoothed_derivative(spectrum, width_hz, scale)
    crossing = np.flatnonzero((derivative[:-1] > 0) & (derivative[1:] <= 0))
    fraction = derivative[crossing] / (derivative[crossing] - derivative[crossing + 1])
    frequencies = (crossing + fraction) * spectrum.bin_width

    nyquist = spectrum.sample_rate / 2
    inside = (frequencies >= edge_guard_hz) & (frequencies <= nyquist - edge_guard_hz)
    frequencies = frequencies[inside]

    max_peaks = spectrum.order // 2
    if len(frequencies) > max_peaks:
        smoothed = smoothed_spectrum(spectrum, width_hz, scale)
        heights = smoothed[np.round(frequencies / spectrum.bin_width).astype(int)]
        strongest = np.sort(np.argsort(-heights, kind='stable')[:max_peaks])
        frequencies = frequencies[strongest]
    return PeakList(frequencies)


def fit_model(frame, method, order, weights=None):
    """
    :param weights: QCP weights (a WeightFunction) for qcp-fb; ignored by lp-cov.
        qcp-fb without weights is plain forward-backward LP.
    """
    if method == METHOD_LP_COV:
        return lp_cov(frame, order)
    if method == METHOD_QCP_FB:
        return lp_fb(frame, order) if weights is None else qcp_fb(frame, order, weights)
    raise ValueError(f"Unknown method {method!r}, expected one of {', '.join(METHODS)}")


def formants_from_frame(frame, method, order, weights=None, sample_rate=8000,
                        grid_size=GRID_SIZE, width_hz=PEAK_WIDTH_HZ, scale=SCALE_DB):
    """
    Spectral peaks of the all-pole model fitted to one pre-emphasized frame.
    Silent frames have no peaks.
    """
    model = fit_model(frame, method, order, weights)
    return peaks_from_model(model, sample_rate, grid_size, width_hz, scale)[0]


def peaks_from_model(model, sample_rate=8000, grid_size=GRID_SIZE, width_hz=PEAK_WIDTH_HZ, scale=SCALE_DB):
    """
    :return: (PeakList, PowerSpectrum or None). Silent frames, whose model has
        all-zero coefficients, have neither peaks nor a spectrum.
    """
    if model.degenerate and not np.any(model.coefficients):
        return PeakList.empty(), None
    spectrum = allpole_power_spectrum(model, grid_size, sample_rate)
    return pick_peaks(spectrum, width_hz, scale), spectrum


def write_spectra_dump(dump_file, times, spectra):
    """
    gnuplot-friendly text: `time_s freq_hz power_db` per line, frames
    separated by a blank line. Frames without a spectrum are left out.
    """
    for time, spectrum in zip(times, spectra):
        if spectrum is None:
            continue
        for frequency, power in zip(spectrum.frequencies, spectrum.to_db()):
            dump_file.write(f"{format_time(time)} {format_sig(frequency)} {format_sig(power)}\n")
        dump_file.write("\n")
