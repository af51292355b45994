"""
Additive noise at a target SNR, and the synthetic corpus with known formant
tracks used for desk-scale experiments.
"""
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NoiseError
from .formant_track import FormantTrack
from .qcp import GciList
from .refine import ALIGN_OFFSET_MS, track_times
from .signal import (
    ANALYSIS_RATE, FrameSpec, SignalBuffer, SynthSpec, filter_through_resonators, frame_signal,
    SOURCE_POLE, glottal_excitation, glottal_pulse_positions, rms_normalize, synthesize_vowel,
)

NOISE_WHITE = 'white'
NOISE_FILE = 'file'
NOISE_KINDS = (NOISE_WHITE, NOISE_FILE)
BABBLE_TALKERS = 8

F1_RANGE = (300.0, 900.0)
F2_RANGE = (900.0, 2400.0)
F3_RANGE = (2200.0, 3400.0)
MIN_FORMANT_GAP = 300.0
BANDWIDTH_RANGES = ((50.0, 80.0), (70.0, 110.0), (90.0, 130.0))
F0_RANGE = (90.0, 220.0)
SEGMENT_COUNT_RANGE = (3, 8)
SEGMENT_DURATION_RANGE = (0.15, 0.30)


@dataclass(frozen=True)
class NoiseSpec:
    """`snr_db` may be math.inf, meaning no noise at all."""
    kind: str = NOISE_WHITE
    snr_db: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise NoiseError(f"Unknown noise kind {self.kind!r}, expected one of {', '.join(NOISE_KINDS)}.")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise NoiseError(f"SNR needs to be a number of decibels, got {self.snr_db}.")

    @property
    def is_clean(self):
        return self.snr_db == math.inf


def _noise_segment(clean, spec, noise_source):
    rng = np.random.default_rng(spec.seed)
    if spec.kind == NOISE_WHITE:
        return rng.standard_normal(len(clean))

    if noise_source is None:
        raise NoiseError("File-based noise needs a noise signal.")
    if noise_source.sample_rate != clean.sample_rate:
        raise NoiseError(
            f"Noise is sampled at {noise_source.sample_rate} Hz, speech at {clean.sample_rate} Hz."
        )
    if len(noise_source) < len(clean):
        raise NoiseError(
            f"Noise signal is shorter than the speech: {len(noise_source)} < {len(clean)} samples."
        )
    offset = int(rng.integers(0, len(noise_source) - len(clean) + 1))
    return noise_source.samples[offset:offset + len(clean)]


def mix_noise(clean, spec, noise_source=None):
    """
    clean + g * noise, with g chosen so that the mean square of the clean
    signal over the scaled noise, both over the full utterance, is `snr_db`.
    White noise is seeded Gaussian; file-based noise is a seeded random
    contiguous segment of `noise_source`.
    """
    if spec.is_clean:
        return clean

    clean_power = clean.power()
    if clean_power == 0:
        raise NoiseError("Cannot set an SNR for a signal without power.")
    noise = _noise_segment(clean, spec, noise_source)
    noise_power = float(np.mean(noise ** 2))
    if noise_power == 0:
        raise NoiseError("Noise segment has no power.")

    gain = math.sqrt(clean_power / (noise_power * 10 ** (spec.snr_db / 10)))
    return clean.with_samples(clean.samples + gain * noise)


def measured_snr(clean, noisy):
    """SNR in dB of `noisy` against `clean`, taking their difference as the noise."""
    noise_power = float(np.mean((noisy.samples - clean.samples) ** 2))
    if noise_power == 0:
        return math.inf
    return 10 * math.log10(clean.power() / noise_power)


# ============================
# =====  Synthetic data  =====
# ============================

@dataclass(frozen=True)
class Utterance:
    """A synthetic utterance, its formant ground truth and its glottal pulse positions."""
    name: str
    audio: SignalBuffer
    truth: FormantTrack
    gcis: GciList


def draw_formants(rng):
    """F1 < F2 < F3 with at least MIN_FORMANT_GAP between neighbours."""
    f1 = rng.uniform(*F1_RANGE)
    f2 = rng.uniform(max(F2_RANGE[0], f1 + MIN_FORMANT_GAP), F2_RANGE[1])
    f3 = rng.uniform(max(F3_RANGE[0], f2 + MIN_FORMANT_GAP), F3_RANGE[1])
    return np.array([f1, f2, f3])


def draw_bandwidths(rng):
    return np.array([rng.uniform(low, high) for low, high in BANDWIDTH_RANGES])


def make_synthetic_utterance(rng, name='synth', frame=FrameSpec(),
                             align_offset_ms=ALIGN_OFFSET_MS, sample_rate=ANALYSIS_RATE):
    """
    A sequence of vowel-like segments. Formants and bandwidths move
    piecewise-linearly between the segment centres and stay constant before
    the first and after the last centre. The source is the impulse train
    tilted by SOURCE_POLE, so the pre-emphasized excitation is close to
    white. The ground truth is sampled at the analysis frame centres and
    stamped like estimated tracks.
    """
    n_segments = int(rng.integers(SEGMENT_COUNT_RANGE[0], SEGMENT_COUNT_RANGE[1] + 1))
    durations = rng.uniform(*SEGMENT_DURATION_RANGE, size=n_segments)
    targets = np.array([draw_formants(rng) for _ in range(n_segments)])
    bandwidths = np.array([draw_bandwidths(rng) for _ in range(n_segments)])
    f0 = rng.uniform(*F0_RANGE)
    pulse_seed = int(rng.integers(2 ** 32))

    bounds = np.concatenate([[0.0], np.cumsum(durations)]) * sample_rate
    centres = (bounds[:-1] + bounds[1:]) / 2
    n_samples = int(round(bounds[-1]))
    positions = np.arange(n_samples)

    def trajectory(values, at):
        return np.column_stack([np.interp(at, centres, values[:, i]) for i in range(values.shape[1])])

    pulses = glottal_pulse_positions(f0, n_samples, sample_rate, pulse_seed)
    excitation = glottal_excitation(pulses, n_samples, SOURCE_POLE)
    samples = filter_through_resonators(
        excitation, trajectory(targets, positions), trajectory(bandwidths, positions), sample_rate,
    )
    audio = SignalBuffer(rms_normalize(samples), sample_rate)

    frames = frame_signal(audio, frame)
    frame_centres = frames.starts + frames.length / 2
    truth = FormantTrack.from_values(track_times(frames, align_offset_ms),
                                     trajectory(targets, frame_centres))
    return Utterance(name, audio, truth, GciList(pulses))


def iter_synthetic_corpus(n_utterances, seed=0, frame=FrameSpec(), align_offset_ms=ALIGN_OFFSET_MS):
    """
    Yields `n_utterances` synthetic utterances. Utterance i is generated from
    its own generator seeded with seed XOR i, so any utterance can be rebuilt
    alone.
    """
    if n_utterances < 1:
        raise ValueError(f"Need at least one utterance, got {n_utterances}")
    for index in range(n_utterances):
        yield make_synthetic_utterance(np.random.default_rng(seed ^ index), f"synth{index:03d}",
                                       frame, align_offset_ms)


def make_synthetic_corpus(n_utterances, seed=0, frame=FrameSpec(), align_offset_ms=ALIGN_OFFSET_MS):
    return list(iter_synthetic_corpus(n_utterances, seed, frame, align_offset_ms))


def make_pseudo_babble(n_samples, seed=0, sample_rate=ANALYSIS_RATE, talkers=BABBLE_TALKERS):
    """
    Stand-in for recorded babble: the sum of `talkers` synthetic vowels with
    random formants and f0, each circularly shifted by a random offset.
    """
    if n_samples < 1:
        raise NoiseError(f"Babble needs at least one sample, got {n_samples}.")
    rng = np.random.default_rng(seed)
    duration = n_samples / sample_rate
    total = np.zeros(n_samples)
    for _ in range(talkers):
        formants = tuple(zip(draw_formants(rng), draw_bandwidths(rng)))
        spec = SynthSpec(rng.uniform(*F0_RANGE), formants, duration, sample_rate, SOURCE_POLE)
        vowel = synthesize_vowel(spec, seed=int(rng.integers(2 ** 32))).samples[:n_samples]
        vowel = np.pad(vowel, (0, n_samples - len(vowel)))
        total += np.roll(vowel, int(rng.integers(n_samples)))
    return SignalBuffer(rms_normalize(total), sample_rate)
