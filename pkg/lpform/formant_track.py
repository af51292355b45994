import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import TrackError
from .helpers import format_sig, format_time
from .signal import ANALYSIS_RATE

HEADER = ["time_s", "f1_hz", "f2_hz", "f3_hz"]
N_FORMANTS = 3
SPACING_TOLERANCE_S = 5e-4


def _in_band(formants, sample_rate):
    return np.all((formants > 0) & (formants < sample_rate / 2), axis=1)


@dataclass(frozen=True)
class FormantTrack:
    """
    F1..F3 in Hz per frame. `formants` has shape (n_frames, 3); `valid` marks
    frames whose three values are all usable, i.e. inside (0, sample_rate / 2).
    """
    times: np.ndarray
    formants: np.ndarray
    valid: np.ndarray
    sample_rate: int = ANALYSIS_RATE

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        formants = np.asarray(self.formants, dtype=np.float64).reshape(-1, N_FORMANTS)
        valid = np.asarray(self.valid, dtype=bool).reshape(-1)
        if not len(times) == len(formants) == len(valid):
            raise TrackError(
                f"Track columns differ in length: {len(times)} times, "
                f"{len(formants)} formant rows, {len(valid)} validity flags."
            )
        if len(times) > 1:
            steps = np.diff(times)
            if np.any(steps <= 0):
                raise TrackError("Track times need to be strictly increasing.")
            if np.ptp(steps) > SPACING_TOLERANCE_S:
                raise TrackError("Track times need to be uniformly spaced.")
        if np.any(valid & ~_in_band(formants, self.sample_rate)):
            raise TrackError(
                f"Valid frames need formants between 0 and {self.sample_rate / 2:g} Hz."
            )
        for array in (times, formants, valid):
            array.setflags(write=False)
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'formants', formants)
        object.__setattr__(self, 'valid', valid)

    def __len__(self):
        return len(self.times)

    @classmethod
    def from_values(cls, times, formants, sample_rate=ANALYSIS_RATE):
        """
        Validity follows the values: a formant that is not positive or not
        below the Nyquist frequency invalidates the frame.
        """
        formants = np.asarray(formants, dtype=np.float64).reshape(-1, N_FORMANTS)
        return cls(times, formants, _in_band(formants, sample_rate), sample_rate)

    @property
    def f1(self):
        return self.formants[:, 0]

    @property
    def f2(self):
        return self.formants[:, 1]

    @property
    def f3(self):
        return self.formants[:, 2]

    @property
    def frame_shift(self):
        if len(self.times) < 2:
            return None
        return float(np.mean(np.diff(self.times)))

    def head(self, n_frames):
        """The first `n_frames` frames."""
        return FormantTrack(self.times[:n_frames], self.formants[:n_frames], self.valid[:n_frames],
                            self.sample_rate)

    def copy(self, **overrides):
        """
        Create a copy of this track.
        :param overrides: Keyword arguments used to override the values for the copy.
        """
        return dataclasses.replace(self, **overrides)


def read_track(path, sample_rate=ANALYSIS_RATE):
    """
    Reads a track CSV with header `time_s,f1_hz,f2_hz,f3_hz`. Rows with a
    formant outside (0, sample_rate / 2) are invalid frames.
    """
    times, formants = [], []
    with Path(path).open(newline='') as track_file:
        reader = csv.reader(track_file)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise TrackError(f"{path}: expected the header {','.join(HEADER)}, got {header}.")
        for line_no, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != len(HEADER):
                raise TrackError(f"{path}:{line_no}: expected {len(HEADER)} columns, got {len(row)}.")
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise TrackError(f"{path}:{line_no}: non-numeric value in {row}.")
            if not np.all(np.isfinite(values)):
                raise TrackError(f"{path}:{line_no}: non-finite value in {row}.")
            times.append(values[0])
            formants.append(values[1:])

    try:
        return FormantTrack.from_values(np.array(times), np.array(formants).reshape(-1, N_FORMANTS),
                                        sample_rate)
    except TrackError as e:
        raise TrackError(f"{path}: {e.message}")


def write_track(track_file, track):
    """
    Writes `track` as CSV to an open text file: times to the nanosecond,
    formants to 6 significant digits. Invalid frames are written as zeros.
    """
    writer = csv.writer(track_file, lineterminator='\n')
    writer.writerow(HEADER)
    for time, formants, valid in zip(track.times, track.formants, track.valid):
        values = formants if valid else np.zeros(N_FORMANTS)
        writer.writerow([format_time(time)] + [format_sig(v) for v in values])
