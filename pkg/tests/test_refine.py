import unittest

import numpy as np
from numpy.testing import assert_array_equal

from lpform.exceptions import GridMismatchError
from lpform.formant_track import FormantTrack
from lpform.qcp import GciList
from lpform.refine import (
    AnalysisSettings, PeakTrack, collision_count, compute_peak_track, estimate_track,
    ordering_violations, refine_frame, refine_track, refine_with_peaks,
)
from lpform.signal import FrameSpec, glottal_pulse_positions
from lpform.spectrum import METHOD_LP_COV, PeakList

from .common import silence, vowel


class TestRefineFrame(unittest.TestCase):

    def test_nearest_peak(self):
        self.assertEqual(refine_frame((550, 1400, 2600), PeakList([500, 1500, 2500])), (500, 1500, 2500))

    def test_fixed_point(self):
        self.assertEqual(refine_frame((500, 1500, 2500), PeakList([500, 1500, 2500])), (500, 1500, 2500))

    def test_no_peaks(self):
        self.assertEqual(refine_frame((550, 1400, 2600), PeakList.empty()), (550, 1400, 2600))

    def test_formants_may_share_a_peak(self):
        self.assertEqual(refine_frame((900, 1000, 2500), PeakList([950, 2500])), (950, 950, 2500))


class TestRefineTrack(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.audio = vowel(f0=120.0, duration_s=0.6, seed=4)
        cls.settings = AnalysisSettings()
        cls.peaks = compute_peak_track(cls.audio, cls.settings)

    def perturbed(self, seed=0):
        truth = np.tile([500.0, 1500.0, 2500.0], (len(self.peaks), 1))
        noise = np.random.default_rng(seed).uniform(-150, 150, truth.shape)
        return FormantTrack.from_values(self.peaks.times, truth + noise)

    def test_times_start_at_zero(self):
        self.assertEqual(self.peaks.times[0], 0.0)
        self.assertAlmostEqual(self.peaks.times[1], 0.01)

    def test_estimated_track_is_a_fixed_point(self):
        estimated = estimate_track(self.peaks)
        self.assertGreater(estimated.valid.sum(), 0)
        refined = refine_with_peaks(estimated, self.peaks)
        assert_array_equal(refined.formants, estimated.formants)
        assert_array_equal(refined.valid, estimated.valid)

    def test_idempotent(self):
        once = refine_with_peaks(self.perturbed(), self.peaks)
        twice = refine_with_peaks(once, self.peaks)
        assert_array_equal(twice.formants, once.formants)

    def test_outputs_are_peaks_or_predictions(self):
        predicted = self.perturbed(1)
        refined = refine_with_peaks(predicted, self.peaks)
        for k in range(len(refined)):
            for value, original in zip(refined.formants[k], predicted.formants[k]):
                self.assertTrue(value in self.peaks.peaks[k].frequencies or value == original)

    def test_refinement_reduces_error(self):
        predicted = self.perturbed(2)
        refined = refine_with_peaks(predicted, self.peaks)
        truth = np.array([500.0, 1500.0, 2500.0])
        before = np.mean(np.abs(predicted.formants - truth), axis=0)
        after = np.mean(np.abs(refined.formants - truth), axis=0)
        self.assertTrue(np.all(after < before))

    def test_invalid_frames_pass_through(self):
        predicted = self.perturbed()
        formants = np.array(predicted.formants)
        formants[3] = 0
        predicted = FormantTrack.from_values(predicted.times, formants)
        refined = refine_with_peaks(predicted, self.peaks)
        self.assertFalse(refined.valid[3])
        assert_array_equal(refined.formants[3], [0, 0, 0])

    def test_grid_mismatch(self):
        predicted = self.perturbed()
        short = FormantTrack(predicted.times[:-2], predicted.formants[:-2], predicted.valid[:-2])
        with self.assertRaises(GridMismatchError) as cm:
            refine_with_peaks(short, self.peaks)
        self.assertIn(str(len(self.peaks)), cm.exception.message)
        self.assertIn(str(len(self.peaks) - 2), cm.exception.message)

    def test_silence_passes_everything_through(self):
        audio = silence(0.5)
        peaks = compute_peak_track(audio, self.settings)
        self.assertTrue(all(len(p) == 0 for p in peaks.peaks))
        predicted = FormantTrack.from_values(peaks.times, np.tile([500.0, 1500.0, 2500.0], (len(peaks), 1)))
        refined = refine_track(predicted, audio, self.settings)
        assert_array_equal(refined.formants, predicted.formants)

    def test_threads_do_not_change_the_result(self):
        parallel = compute_peak_track(self.audio, self.settings.replace(threads=4))
        self.assertEqual(len(parallel), len(self.peaks))
        for a, b in zip(parallel.peaks, self.peaks.peaks):
            assert_array_equal(a.frequencies, b.frequencies)

    def test_external_gcis(self):
        gcis = GciList(glottal_pulse_positions(120.0, len(self.audio), 8000, seed=4))
        peaks = compute_peak_track(self.audio, self.settings, gcis)
        self.assertEqual(len(peaks), len(self.peaks))

    def test_frame_locality(self):
        settings = AnalysisSettings(method=METHOD_LP_COV, frame=FrameSpec(10, 10))
        before = compute_peak_track(self.audio, settings)
        samples = np.array(self.audio.samples)
        samples[801:879] = np.random.default_rng(5).standard_normal(78) * 0.1
        after = compute_peak_track(self.audio.with_samples(samples), settings)
        for k in range(len(before)):
            if k == 10:
                continue
            assert_array_equal(after.peaks[k].frequencies, before.peaks[k].frequencies)


class TestEstimateTrack(unittest.TestCase):

    def test_fewer_than_three_peaks_is_invalid(self):
        peaks = PeakTrack(np.array([0.0, 0.01]), (PeakList([500, 1500, 2500, 3500]), PeakList([500, 1500])))
        track = estimate_track(peaks)
        assert_array_equal(track.valid, [True, False])
        assert_array_equal(track.formants[0], [500, 1500, 2500])


class TestDiagnostics(unittest.TestCase):

    def test_collisions_and_ordering(self):
        track = FormantTrack.from_values(
            [0.0, 0.01, 0.02, 0.03],
            [[500, 1500, 2500], [950, 950, 2500], [1500, 500, 2500], [0, 0, 0]],
        )
        self.assertEqual(collision_count(track), 1)
        self.assertEqual(ordering_violations(track), 2)
