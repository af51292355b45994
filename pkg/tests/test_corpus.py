import math
import unittest

import numpy as np
from numpy.testing import assert_array_equal

from lpform.corpus import (
    MIN_FORMANT_GAP, NOISE_FILE, NoiseSpec, make_pseudo_babble, make_synthetic_corpus, measured_snr,
    mix_noise,
)
from lpform.exceptions import NoiseError
from lpform.qcp import detect_gci

from .common import silence, vowel


class TestMixNoise(unittest.TestCase):

    def setUp(self):
        self.clean = vowel(f0=110.0, duration_s=0.5, seed=2)

    def test_zero_db(self):
        noisy = mix_noise(self.clean, NoiseSpec(snr_db=0.0, seed=1))
        noise_power = float(np.mean((noisy.samples - self.clean.samples) ** 2))
        self.assertAlmostEqual(noise_power, self.clean.power(), delta=1e-6)

    def test_target_snr(self):
        for snr_db in (-5.0, 5.0, 20.0):
            noisy = mix_noise(self.clean, NoiseSpec(snr_db=snr_db, seed=3))
            self.assertAlmostEqual(measured_snr(self.clean, noisy), snr_db, delta=0.01)

    def test_seeded(self):
        a = mix_noise(self.clean, NoiseSpec(snr_db=10.0, seed=4))
        b = mix_noise(self.clean, NoiseSpec(snr_db=10.0, seed=4))
        c = mix_noise(self.clean, NoiseSpec(snr_db=10.0, seed=5))
        assert_array_equal(a.samples, b.samples)
        self.assertFalse(np.array_equal(a.samples, c.samples))

    def test_infinite_snr_is_clean(self):
        self.assertIs(mix_noise(self.clean, NoiseSpec(snr_db=math.inf)), self.clean)

    def test_file_noise(self):
        babble = make_pseudo_babble(2 * len(self.clean), seed=6)
        noisy = mix_noise(self.clean, NoiseSpec(NOISE_FILE, 5.0, seed=7), babble)
        self.assertEqual(len(noisy), len(self.clean))
        self.assertAlmostEqual(measured_snr(self.clean, noisy), 5.0, delta=0.01)

    def test_errors(self):
        with self.assertRaises(NoiseError):
            mix_noise(silence(0.5), NoiseSpec(snr_db=10.0))
        with self.assertRaises(NoiseError):
            mix_noise(self.clean, NoiseSpec(NOISE_FILE, 10.0))
        with self.assertRaises(NoiseError):
            mix_noise(self.clean, NoiseSpec(NOISE_FILE, 10.0), make_pseudo_babble(100))
        with self.assertRaises(NoiseError):
            NoiseSpec('pink', 10.0)
        with self.assertRaises(NoiseError):
            NoiseSpec(snr_db=float('nan'))


class TestSyntheticCorpus(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.corpus = make_synthetic_corpus(4, seed=12)

    def test_formants_are_ordered_and_apart(self):
        for utterance in self.corpus:
            formants = utterance.truth.formants
            self.assertTrue(np.all(utterance.truth.valid))
            self.assertTrue(np.all(np.diff(formants, axis=1) >= MIN_FORMANT_GAP - 1e-9))

    def test_track_grid(self):
        for utterance in self.corpus:
            times = utterance.truth.times
            self.assertEqual(times[0], 0.0)
            self.assertTrue(np.allclose(np.diff(times), 0.01))
            self.assertEqual(utterance.audio.sample_rate, 8000)

    def test_pulses_inside_the_signal(self):
        for utterance in self.corpus:
            gcis = utterance.gcis.instants
            self.assertTrue(np.all(gcis < len(utterance.audio)))
            self.assertTrue(np.all(np.diff(gcis) > 0))

    def test_detected_gcis_follow_the_pulses(self):
        for utterance in self.corpus:
            truth = utterance.gcis.instants
            detected = detect_gci(utterance.audio).instants
            # the trend removal costs a few periods at either end
            self.assertGreaterEqual(len(detected), 0.7 * len(truth))
            self.assertLessEqual(len(detected), len(truth))
            distance = np.abs(detected[:, np.newaxis] - truth[np.newaxis, :]).min(axis=1)
            self.assertGreaterEqual(float(np.mean(distance <= 4)), 0.95)

    def test_seeded(self):
        again = make_synthetic_corpus(4, seed=12)
        for a, b in zip(self.corpus, again):
            self.assertEqual(a.name, b.name)
            assert_array_equal(a.audio.samples, b.audio.samples)
            assert_array_equal(a.truth.formants, b.truth.formants)

    def test_utterances_can_be_rebuilt_alone(self):
        # utterance 2 of a larger corpus is utterance 2 of this one
        larger = make_synthetic_corpus(6, seed=12)
        assert_array_equal(larger[2].audio.samples, self.corpus[2].audio.samples)

    def test_needs_an_utterance(self):
        with self.assertRaises(ValueError):
            make_synthetic_corpus(0)


class TestPseudoBabble(unittest.TestCase):

    def test_babble(self):
        babble = make_pseudo_babble(4000, seed=3)
        self.assertEqual(len(babble), 4000)
        self.assertAlmostEqual(math.sqrt(babble.power()), 0.1, places=9)
        assert_array_equal(babble.samples, make_pseudo_babble(4000, seed=3).samples)
