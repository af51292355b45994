"""
Experiment runners: raw LP estimates and refined external predictions,
scored against ground truth under a set of noise conditions.
"""
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tabulate

from .corpus import NOISE_FILE, NOISE_WHITE, NoiseSpec, make_pseudo_babble, mix_noise
from .evaluation import ALL, CSV_HEADER, EvalConfig, EvaluationPool, report_rows
from .formant_track import FormantTrack, N_FORMANTS, read_track
from .helpers import format_sig
from .phone_labels import LABELS_RATE, read_phn
from .refine import AnalysisSettings, compute_peak_track, estimate_track, refine_with_peaks
from .signal import read_wav
from .spectrum import METHOD_LP_COV, METHOD_QCP_FB

BABBLE = 'babble'
CONDITION_KINDS = (NOISE_WHITE, BABBLE)

GCI_DETECT = 'detect'
GCI_ORACLE = 'oracle'

PREDICTED = 'predicted'
TRACKER_LP_COV = METHOD_LP_COV
TRACKER_QCP_FB = METHOD_QCP_FB
REFINED_LP_COV = f'{PREDICTED}+{METHOD_LP_COV}'
REFINED_QCP_FB = f'{PREDICTED}+{METHOD_QCP_FB}'
SYNTHETIC_TRACKERS = (TRACKER_LP_COV, TRACKER_QCP_FB, PREDICTED, REFINED_LP_COV, REFINED_QCP_FB)
REPRODUCTION_TRACKERS = (PREDICTED, REFINED_LP_COV, REFINED_QCP_FB)


@dataclass(frozen=True)
class NoiseCondition:
    kind: str = NOISE_WHITE
    snr_db: float = math.inf

    @property
    def is_clean(self):
        return self.snr_db == math.inf

    @property
    def label(self):
        if self.is_clean:
            return 'clean'
        return f"{self.kind} {format_sig(self.snr_db)} dB"

    def apply(self, audio, seed):
        if self.is_clean:
            return audio
        if self.kind == BABBLE:
            babble = make_pseudo_babble(len(audio), seed=seed, sample_rate=audio.sample_rate)
            return mix_noise(audio, NoiseSpec(NOISE_FILE, self.snr_db, seed), babble)
        return mix_noise(audio, NoiseSpec(NOISE_WHITE, self.snr_db, seed))


CLEAN = NoiseCondition()


def parse_conditions(kinds, snrs):
    """
    Clean first, then every noise kind at every finite SNR.
    :param kinds: noise kinds, 'white' and/or 'babble'
    :param snrs: decibels, math.inf stands for the clean condition
    """
    conditions = [CLEAN] if math.inf in snrs or not snrs else []
    for kind in kinds:
        if kind not in CONDITION_KINDS:
            raise ValueError(f"Unknown noise kind {kind!r}, expected one of {', '.join(CONDITION_KINDS)}")
        conditions.extend(NoiseCondition(kind, snr) for snr in snrs if snr != math.inf)
    return conditions


def perturb(track, spread_hz, rng):
    """Stand-in for an external tracker: the truth plus uniform noise in [-spread, spread] Hz."""
    noise = rng.uniform(-spread_hz, spread_hz, size=track.formants.shape)
    formants = np.where(track.valid[:, None], track.formants + noise, 0.0)
    return FormantTrack.from_values(track.times, formants)


@dataclass(frozen=True)
class ExperimentConfig:
    settings: AnalysisSettings = field(default_factory=AnalysisSettings)
    eval_config: EvalConfig = field(default_factory=EvalConfig)
    conditions: tuple = (CLEAN,)
    spread_hz: float = 150.0
    seed: int = 0
    gci_source: str = GCI_DETECT


@dataclass
class ExperimentResult:
    """`reports[condition label][tracker]` is a pooled EvalReport."""
    reports: dict
    utterances: int = 0

    def fee(self, condition, tracker, category=ALL):
        return self.reports[condition][tracker][category].fee_hz


def run_synthetic_experiment(utterances, config=ExperimentConfig()):
    """
    For every utterance and noise condition: the raw LP-COV and QCP-FB
    estimates, the perturbed truth standing in for an external tracker, and
    that prediction refined with either method, each scored against the
    truth. Noise and perturbation are seeded per utterance.
    :param utterances: iterable of corpus.Utterance, e.g. a click progress bar
    """
    settings = config.settings
    lp_cov_settings = settings.replace(method=METHOD_LP_COV)
    qcp_fb_settings = settings.replace(method=METHOD_QCP_FB)
    pools = {
        condition.label: {tracker: EvaluationPool(config.eval_config) for tracker in SYNTHETIC_TRACKERS}
        for condition in config.conditions
    }

    count = 0
    for index, utterance in enumerate(utterances):
        count += 1
        truth = utterance.truth
        predicted = perturb(truth, config.spread_hz, np.random.default_rng([config.seed, index]))
        gcis = utterance.gcis if config.gci_source == GCI_ORACLE else None

        for condition in config.conditions:
            audio = condition.apply(utterance.audio, config.seed ^ index)
            lp_cov_peaks = compute_peak_track(audio, lp_cov_settings)
            qcp_fb_peaks = compute_peak_track(audio, qcp_fb_settings, gcis)
            hypotheses = {
                TRACKER_LP_COV: estimate_track(lp_cov_peaks),
                TRACKER_QCP_FB: estimate_track(qcp_fb_peaks),
                PREDICTED: predicted,
                REFINED_LP_COV: refine_with_peaks(predicted, lp_cov_peaks),
                REFINED_QCP_FB: refine_with_peaks(predicted, qcp_fb_peaks),
            }
            for tracker, hypothesis in hypotheses.items():
                pools[condition.label][tracker].add(truth, hypothesis)

    reports = {
        condition: {tracker: pool.report() for tracker, pool in trackers.items()}
        for condition, trackers in pools.items()
    }
    return ExperimentResult(reports, count)


# ============================
# =====  Reproduction   ======
# ============================

@dataclass(frozen=True)
class UtteranceFiles:
    stem: str
    reference: Path
    audio: Path
    predicted: Path
    labels: Path = None


def find_utterance_files(reference_dir, audio_dir, predicted_dir, labels_dir=None):
    """
    Matches `<stem>.csv` reference tracks with `<stem>.wav` audio,
    `<stem>.csv` predictions and, when a label directory is given,
    `<stem>.phn` labels.
    :return: (matched UtteranceFiles sorted by stem, stems with missing files)
    """
    matched, missing = [], []
    for reference in sorted(Path(reference_dir).glob('*.csv')):
        stem = reference.stem
        audio = Path(audio_dir) / f"{stem}.wav"
        predicted = Path(predicted_dir) / f"{stem}.csv"
        labels = Path(labels_dir) / f"{stem}.phn" if labels_dir is not None else None
        if not audio.exists() or not predicted.exists() or (labels is not None and not labels.exists()):
            missing.append(stem)
            continue
        matched.append(UtteranceFiles(stem, reference, audio, predicted, labels))
    return matched, missing


@dataclass
class ReproductionResult:
    reports: dict
    utterances: int = 0
    trimmed_frames: int = 0


def run_reproduction(files, settings=AnalysisSettings(), eval_config=EvalConfig(),
                     condition=CLEAN, seed=0, category_map=None, labels_rate=LABELS_RATE):
    """
    Refines external predictions of real recordings with LP-COV and QCP-FB
    and scores the unrefined and both refined tracks against the reference,
    pooled over all utterances. Reference, prediction and analysis grids
    are cut to their common length; the cut frames are counted.
    :param files: iterable of UtteranceFiles, e.g. a click progress bar
    """
    pools = {tracker: EvaluationPool(eval_config, category_map, labels_rate)
             for tracker in REPRODUCTION_TRACKERS}
    lp_cov_settings = settings.replace(method=METHOD_LP_COV)
    qcp_fb_settings = settings.replace(method=METHOD_QCP_FB)

    count = trimmed = 0
    for index, utterance in enumerate(files):
        count += 1
        reference = read_track(utterance.reference)
        predicted = read_track(utterance.predicted)
        labels = read_phn(utterance.labels) if utterance.labels is not None else None
        audio = condition.apply(read_wav(utterance.audio), seed ^ index)

        lp_cov_peaks = compute_peak_track(audio, lp_cov_settings)
        qcp_fb_peaks = compute_peak_track(audio, qcp_fb_settings)
        n_frames = min(len(reference), len(predicted), len(lp_cov_peaks))
        trimmed += len(reference) - n_frames
        reference = reference.head(n_frames)
        predicted = predicted.head(n_frames)

        hypotheses = {
            PREDICTED: predicted,
            REFINED_LP_COV: refine_with_peaks(predicted, lp_cov_peaks.head(n_frames)),
            REFINED_QCP_FB: refine_with_peaks(predicted, qcp_fb_peaks.head(n_frames)),
        }
        for tracker, hypothesis in hypotheses.items():
            pools[tracker].add(reference, hypothesis, labels)

    reports = {tracker: pool.report() for tracker, pool in pools.items()}
    return ReproductionResult(reports, count, trimmed)


# ============================
# =====   Reporting     ======
# ============================

def tracker_table(reports, category=ALL):
    """One row per tracker: frames, then FDR, FEE and MAD for F1..F3."""
    headers = ['Tracker', 'Frames']
    headers += [f"FDR F{i} (%)" for i in range(1, N_FORMANTS + 1)]
    headers += [f"FEE F{i} (Hz)" for i in range(1, N_FORMANTS + 1)]
    headers += [f"MAD F{i} (%)" for i in range(1, N_FORMANTS + 1)]
    rows = []
    for tracker, report in reports.items():
        scores = report.cells.get(category)
        if scores is None:
            rows.append([tracker, 0] + ['n/a'] * (3 * N_FORMANTS))
            continue
        values = [f"{v:.1f}" for v in scores.fdr_percent + scores.fee_hz + scores.mad_percent]
        rows.append([tracker, scores.frames] + values)
    return tabulate.tabulate(rows, headers=headers)


def write_results_csv(results_file, reports_by_condition):
    """
    The evaluation CSV columns prefixed with `condition,tracker`.
    :param reports_by_condition: {condition label: {tracker: EvalReport}}
    """
    writer = csv.writer(results_file, lineterminator='\n')
    writer.writerow(['condition', 'tracker'] + CSV_HEADER)
    for condition, reports in reports_by_condition.items():
        for tracker, report in reports.items():
            for row in report_rows(report):
                writer.writerow([condition, tracker] + row)
