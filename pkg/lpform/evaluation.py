"""
Formant detection rate (FDR), formant estimation error (FEE) and mean
absolute deviation (MAD) of a hypothesis track against a reference track,
optionally restricted to broad phonetic categories.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np
import tabulate

from .exceptions import GridMismatchError, LabelError, TrackError
from .formant_track import N_FORMANTS
from .helpers import format_sig, format_time
from .phone_labels import CATEGORIES, LABELS_RATE, map_phones_to_categories

ALL = 'all'
TIME_TOLERANCE_S = 1e-4
JND_RANGE_PERCENT = (3.0, 10.0)
CSV_HEADER = ['category', 'formant', 'fdr_percent', 'fee_hz', 'mad_percent', 'frames']


@dataclass(frozen=True)
class EvalConfig:
    tau_r: float = 0.30
    tau_a: float = 300.0
    categories: tuple = (ALL,)

    def __post_init__(self):
        if not self.tau_r > 0:
            raise ValueError(f"tau_r needs to be positive, got {self.tau_r}")
        if not self.tau_a > 0:
            raise ValueError(f"tau_a needs to be positive, got {self.tau_a}")
        categories = tuple(self.categories) or (ALL,)
        for category in categories:
            if category != ALL and category not in CATEGORIES:
                raise LabelError(
                    f"Unknown category {category!r}, expected 'all' or one of {', '.join(CATEGORIES)}."
                )
        object.__setattr__(self, 'categories', categories)

    @property
    def all_categories(self):
        return ALL in self.categories


def formant_detected(ref_hz, hyp_hz, cfg):
    """Both the relative and the absolute deviation strictly below their thresholds."""
    delta = abs(ref_hz - hyp_hz)
    return delta / ref_hz < cfg.tau_r and delta < cfg.tau_a


@dataclass(frozen=True)
class CellScores:
    """Scores of one category cell, one value per formant."""
    category: str
    frames: int
    fdr_percent: tuple
    fee_hz: tuple
    mad_percent: tuple

    def jnd_formants(self):
        """Formants whose MAD lies in the human formant discrimination range."""
        low, high = JND_RANGE_PERCENT
        return tuple(i + 1 for i, mad in enumerate(self.mad_percent) if low <= mad <= high)


@dataclass(frozen=True)
class EvalReport:
    """
    `cells` maps category name to CellScores, or to None when the category
    had no usable frames. `skipped` counts frames with a valid reference but
    an invalid hypothesis.
    """
    cells: dict
    skipped: int
    unknown_labels: int
    config: EvalConfig

    def __getitem__(self, category):
        return self.cells[category]


def score_frames(ref, hyp, cfg, category=ALL):
    """
    Scores the frames of two (K, 3) arrays. Sums are compensated, so the
    result does not depend on the frame order.
    :return: CellScores, or None when there are no frames
    """
    ref = np.asarray(ref, dtype=np.float64).reshape(-1, N_FORMANTS)
    hyp = np.asarray(hyp, dtype=np.float64).reshape(-1, N_FORMANTS)
    frames = len(ref)
    if frames == 0:
        return None

    delta = np.abs(hyp - ref)
    relative = delta / ref
    detected = (relative < cfg.tau_r) & (delta < cfg.tau_a)
    fdr = tuple(100 * int(np.count_nonzero(detected[:, i])) / frames for i in range(N_FORMANTS))
    fee = tuple(math.fsum(delta[:, i]) / frames for i in range(N_FORMANTS))
    mad = tuple(100 * math.fsum(relative[:, i]) / frames for i in range(N_FORMANTS))
    return CellScores(category, frames, fdr, fee, mad)


def check_same_grid(ref, hyp):
    if len(ref) != len(hyp):
        raise GridMismatchError("Hypothesis track does not match the reference grid",
                                expected=len(ref), got=len(hyp))
    off_grid = np.flatnonzero(np.abs(ref.times - hyp.times) > TIME_TOLERANCE_S)
    if len(off_grid):
        k = off_grid[0]
        raise TrackError(
            f"Reference and hypothesis frame times differ at frame {k}: "
            f"{format_time(ref.times[k])} s vs {format_time(hyp.times[k])} s."
        )


def evaluate(ref, hyp, labels=None, cfg=EvalConfig(), category_map=None, labels_rate=LABELS_RATE):
    """
    Evaluates `hyp` against `ref` over the frames where both are valid.

    Without labels the report has a single `all` cell over every usable
    frame. With phone segments (`labels`) frames take the category of the
    segment containing their time; category `other` is never scored. Asking
    for `all` yields a cell per category plus the union cell `all`, asking
    for explicit categories yields a cell each and, for more than one, their
    union under the name 'a+b+...'.
    """
    pool = EvaluationPool(cfg, category_map, labels_rate)
    pool.add(ref, hyp, labels)
    return pool.report()


def cell_masks(ref, hyp, labels, cfg, category_map=None, labels_rate=LABELS_RATE):
    """
    :return: ({cell name: frame mask}, skipped frames, unknown label count)
    """
    check_same_grid(ref, hyp)
    usable = ref.valid & hyp.valid
    skipped = int(np.count_nonzero(ref.valid & ~hyp.valid))

    if labels is None:
        if not cfg.all_categories:
            raise LabelError("Restricting the evaluation to categories needs phone labels.")
        return {ALL: usable}, skipped, 0

    assignment = map_phones_to_categories(labels, ref.times, category_map, labels_rate)
    frame_categories = assignment.categories
    selected = CATEGORIES if cfg.all_categories else cfg.categories

    masks = {category: usable & (frame_categories == category) for category in selected}
    if cfg.all_categories or len(selected) > 1:
        union = ALL if cfg.all_categories else '+'.join(selected)
        masks[union] = usable & np.isin(frame_categories, selected)
    return masks, skipped, assignment.unknown_count


class EvaluationPool:
    """
    Collects scored frames of several utterances so that the metrics are
    computed over all of their frames together.
    """

    def __init__(self, cfg=EvalConfig(), category_map=None, labels_rate=LABELS_RATE):
        self.cfg = cfg
        self.category_map = category_map
        self.labels_rate = labels_rate
        self.skipped = 0
        self.unknown_labels = 0
        self._ref = {}
        self._hyp = {}

    def add(self, ref, hyp, labels=None):
        masks, skipped, unknown = cell_masks(ref, hyp, labels, self.cfg,
                                             self.category_map, self.labels_rate)
        self.skipped += skipped
        self.unknown_labels += unknown
        for name, mask in masks.items():
            self._ref.setdefault(name, []).append(ref.formants[mask])
            self._hyp.setdefault(name, []).append(hyp.formants[mask])

    def report(self):
        cells = {}
        for name in self._ref:
            ref = np.concatenate(self._ref[name])
            hyp = np.concatenate(self._hyp[name])
            cells[name] = score_frames(ref, hyp, self.cfg, name)
        return EvalReport(cells, self.skipped, self.unknown_labels, self.cfg)


# ============================
# =====   Reporting     ======
# ============================

def report_table(report):
    headers = ['Category', 'Frames']
    headers += [f"FDR F{i} (%)" for i in range(1, N_FORMANTS + 1)]
    headers += [f"FEE F{i} (Hz)" for i in range(1, N_FORMANTS + 1)]
    headers += [f"MAD F{i} (%)" for i in range(1, N_FORMANTS + 1)]
    headers.append('JND')

    rows = []
    for category, scores in report.cells.items():
        if scores is None:
            rows.append([category, 0] + ['n/a'] * (3 * N_FORMANTS) + [''])
            continue
        values = [f"{v:.1f}" for v in scores.fdr_percent]
        values += [f"{v:.1f}" for v in scores.fee_hz]
        values += [f"{v:.1f}" for v in scores.mad_percent]
        jnd = ','.join(f"F{i}" for i in scores.jnd_formants()) or '-'
        rows.append([category, scores.frames] + values + [jnd])
    return tabulate.tabulate(rows, headers=headers)


def report_rows(report):
    """CSV rows, one per category and formant; absent cells are left out."""
    for category, scores in report.cells.items():
        if scores is None:
            continue
        for i in range(N_FORMANTS):
            yield [
                category, f"F{i + 1}",
                format_sig(scores.fdr_percent[i]),
                format_sig(scores.fee_hz[i]),
                format_sig(scores.mad_percent[i]),
                scores.frames,
            ]


def write_report_csv(report_file, report):
    writer = csv.writer(report_file, lineterminator='\n')
    writer.writerow(CSV_HEADER)
    writer.writerows(report_rows(report))
