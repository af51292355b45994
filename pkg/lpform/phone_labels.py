"""
TIMIT-style phone label files and their mapping to broad phonetic categories.
"""
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .exceptions import LabelError

CATEGORIES = ('vowel', 'diphthong', 'semivowel', 'nasal', 'fricative', 'voice_bar', 'stop')
OTHER = 'other'
LABELS_RATE = 16000
DEFAULT_CATEGORY_MAP = Path(__file__).parent / 'data' / 'phone_categories.txt'


class PhoneSegment(NamedTuple):
    start: int
    end: int
    label: str


def _content_lines(path):
    with Path(path).open() as label_file:
        for line_no, line in enumerate(label_file, start=1):
            # only whole-line comments, 'h#' is a phone label
            line = line.strip()
            if line and not line.startswith('#'):
                yield line_no, line


def read_phn(path):
    """One segment per line: `start_sample end_sample label`."""
    segments = []
    for line_no, line in _content_lines(path):
        parts = line.split()
        if len(parts) != 3:
            raise LabelError(f"{path}:{line_no}: expected 'start end label', got {line!r}.")
        try:
            start, end = int(parts[0]), int(parts[1])
        except ValueError:
            raise LabelError(f"{path}:{line_no}: segment boundaries need to be integers.")
        if end <= start:
            raise LabelError(f"{path}:{line_no}: segment ends before it starts.")
        segments.append(PhoneSegment(start, end, parts[2]))
    return sorted(segments)


def read_category_map(path=None):
    """`phone category` per line; '#' starts a comment line."""
    path = DEFAULT_CATEGORY_MAP if path is None else path
    mapping = {}
    for line_no, line in _content_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise LabelError(f"{path}:{line_no}: expected 'phone category', got {line!r}.")
        phone, category = parts
        if category not in CATEGORIES and category != OTHER:
            raise LabelError(
                f"{path}:{line_no}: unknown category {category!r}, expected one of "
                f"{', '.join(CATEGORIES + (OTHER,))}."
            )
        mapping[phone] = category
    return mapping


@dataclass(frozen=True)
class CategoryAssignment:
    """A category per frame, and how often each unmapped phone label was seen."""
    categories: np.ndarray
    unknown: Counter

    @property
    def unknown_count(self):
        return sum(self.unknown.values())


def map_phones_to_categories(segments, times, category_map=None, labels_rate=LABELS_RATE):
    """
    Assigns every frame the category of the phone segment containing its
    time. Frames outside any segment are `other`; unknown labels are `other`
    and counted (once per frame).
    :param times: frame times in seconds
    :param labels_rate: sample rate the segment boundaries are counted in
    """
    if category_map is None:
        category_map = read_category_map()

    categories = np.full(len(times), OTHER, dtype=object)
    unknown = Counter()
    if not segments:
        return CategoryAssignment(categories, unknown)

    starts = np.array([s.start for s in segments])
    positions = np.asarray(times) * labels_rate
    candidates = np.searchsorted(starts, positions, side='right') - 1
    for k, (index, position) in enumerate(zip(candidates, positions)):
        if index < 0:
            continue
        segment = segments[index]
        if position >= segment.end:
            continue
        category = category_map.get(segment.label)
        if category is None:
            unknown[segment.label] += 1
            category = OTHER
        categories[k] = category
    return CategoryAssignment(categories, unknown)
