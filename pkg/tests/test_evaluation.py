import io
import unittest

import numpy as np

from lpform.evaluation import (
    ALL, EvalConfig, EvaluationPool, evaluate, formant_detected, report_table, write_report_csv,
)
from lpform.exceptions import GridMismatchError, LabelError, TrackError
from lpform.formant_track import FormantTrack
from lpform.phone_labels import PhoneSegment


def track(formants, shift=0.01):
    formants = np.asarray(formants, dtype=float)
    return FormantTrack.from_values(np.arange(len(formants)) * shift, formants)


def straightforward_scores(ref, hyp, tau_r, tau_a):
    fdr, fee, mad = [], [], []
    for i in range(3):
        detected = total = relative = 0.0
        for r, h in zip(ref[:, i], hyp[:, i]):
            delta = abs(r - h)
            detected += 1 if delta / r < tau_r and delta < tau_a else 0
            total += delta
            relative += delta / r
        fdr.append(100 * detected / len(ref))
        fee.append(total / len(ref))
        mad.append(100 * relative / len(ref))
    return fdr, fee, mad


class TestDetection(unittest.TestCase):

    def test_detector(self):
        cfg = EvalConfig()
        self.assertTrue(formant_detected(1000, 1000, cfg))
        self.assertTrue(formant_detected(1000, 1290, cfg))
        self.assertFalse(formant_detected(2500, 2190, cfg))
        self.assertFalse(formant_detected(500, 660, cfg))

    def test_thresholds_are_strict(self):
        self.assertFalse(formant_detected(1000, 1300, EvalConfig(tau_r=0.5, tau_a=300)))

    def test_thresholds_must_be_positive(self):
        with self.assertRaises(ValueError):
            EvalConfig(tau_r=0)

    def test_unknown_category(self):
        with self.assertRaises(LabelError):
            EvalConfig(categories=('vowels',))


class TestEvaluate(unittest.TestCase):

    def test_identical_tracks(self):
        ref = track(np.tile([500, 1500, 2500], (10, 1)))
        scores = evaluate(ref, ref)[ALL]
        self.assertEqual(scores.fdr_percent, (100.0, 100.0, 100.0))
        self.assertEqual(scores.fee_hz, (0.0, 0.0, 0.0))
        self.assertEqual(scores.mad_percent, (0.0, 0.0, 0.0))
        self.assertEqual(scores.frames, 10)

    def test_two_frames(self):
        ref = track([[1000, 1500, 2500], [1000, 1500, 2500]])
        hyp = track([[1290, 1500, 2500], [1400, 1500, 2500]])
        scores = evaluate(ref, hyp)[ALL]
        self.assertEqual(scores.fdr_percent[0], 50.0)
        self.assertAlmostEqual(scores.fee_hz[0], 345.0, places=9)
        self.assertAlmostEqual(scores.mad_percent[0], 34.5, places=9)
        self.assertEqual(scores.fdr_percent[1], 100.0)

    def test_matches_straightforward_implementation(self):
        rng = np.random.default_rng(8)
        ref = rng.uniform([300, 900, 2200], [900, 2400, 3400], (1000, 3))
        hyp = ref + rng.normal(0, 200, (1000, 3))
        hyp = np.abs(hyp) + 1
        cfg = EvalConfig(tau_r=0.2, tau_a=250)
        scores = evaluate(track(ref), track(hyp), cfg=cfg)[ALL]
        fdr, fee, mad = straightforward_scores(ref, hyp, 0.2, 250)
        np.testing.assert_allclose(scores.fdr_percent, fdr, rtol=1e-9)
        np.testing.assert_allclose(scores.fee_hz, fee, rtol=1e-9)
        np.testing.assert_allclose(scores.mad_percent, mad, rtol=1e-9)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(9)
        ref = rng.uniform(300, 3000, (200, 3))
        hyp = ref + rng.normal(0, 100, (200, 3))
        order = rng.permutation(200)
        a = evaluate(track(ref), track(hyp))[ALL]
        b = evaluate(track(ref[order]), track(hyp[order]))[ALL]
        self.assertEqual(a.fdr_percent, b.fdr_percent)
        self.assertEqual(a.fee_hz, b.fee_hz)
        self.assertEqual(a.mad_percent, b.mad_percent)

    def test_larger_thresholds_never_lower_fdr(self):
        rng = np.random.default_rng(10)
        ref = rng.uniform(300, 3000, (300, 3))
        hyp = ref + rng.normal(0, 300, (300, 3))
        hyp = np.abs(hyp) + 1
        strict = evaluate(track(ref), track(hyp), cfg=EvalConfig(0.1, 100))[ALL]
        loose = evaluate(track(ref), track(hyp), cfg=EvalConfig(0.3, 300))[ALL]
        self.assertTrue(all(lo >= st for lo, st in zip(loose.fdr_percent, strict.fdr_percent)))

    def test_invalid_frames(self):
        ref = track([[1000, 1500, 2500], [0, 0, 0], [1000, 1500, 2500]])
        hyp = track([[1000, 1500, 2500], [1000, 1500, 2500], [0, 0, 0]])
        report = evaluate(ref, hyp)
        self.assertEqual(report[ALL].frames, 1)
        self.assertEqual(report.skipped, 1)

    def test_grid_mismatch(self):
        ref = track(np.tile([500, 1500, 2500], (10, 1)))
        with self.assertRaises(GridMismatchError):
            evaluate(ref, track(np.tile([500, 1500, 2500], (9, 1))))
        with self.assertRaises(TrackError):
            evaluate(ref, track(np.tile([500, 1500, 2500], (10, 1)), shift=0.011))

    def test_categories_need_labels(self):
        ref = track(np.tile([500, 1500, 2500], (10, 1)))
        with self.assertRaises(LabelError):
            evaluate(ref, ref, cfg=EvalConfig(categories=('vowel',)))


class TestCategories(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(11)
        self.ref = track(rng.uniform([300, 900, 2200], [900, 2400, 3400], (40, 3)))
        self.hyp = track(self.ref.formants + rng.normal(0, 80, (40, 3)))
        # frames 0-9 silence, 10-24 vowel, 25-34 nasal, 35-39 diphthong, at 16 kHz
        self.labels = [
            PhoneSegment(0, 1520, 'h#'),
            PhoneSegment(1520, 3920, 'iy'),
            PhoneSegment(3920, 5520, 'm'),
            PhoneSegment(5520, 6500, 'ay'),
        ]

    def test_breakdown(self):
        report = evaluate(self.ref, self.hyp, self.labels)
        self.assertEqual(report['vowel'].frames, 15)
        self.assertEqual(report['nasal'].frames, 10)
        self.assertEqual(report['diphthong'].frames, 5)
        self.assertIsNone(report['stop'])
        self.assertEqual(report[ALL].frames, 30)
        self.assertEqual(list(report.cells)[-1], ALL)

    def test_union_is_weighted_combination(self):
        cfg = EvalConfig(categories=('vowel', 'nasal'))
        report = evaluate(self.ref, self.hyp, self.labels, cfg)
        union = report['vowel+nasal']
        self.assertEqual(union.frames, 25)
        for i in range(3):
            combined = (report['vowel'].fee_hz[i] * 15 + report['nasal'].fee_hz[i] * 10) / 25
            self.assertAlmostEqual(union.fee_hz[i], combined, delta=1e-9)

    def test_single_category(self):
        report = evaluate(self.ref, self.hyp, self.labels, EvalConfig(categories=('nasal',)))
        self.assertEqual(list(report.cells), ['nasal'])

    def test_pool_equals_single_evaluation(self):
        pool = EvaluationPool()
        pool.add(self.ref, self.hyp, self.labels)
        pool.add(self.ref, self.hyp, self.labels)
        pooled = pool.report()
        single = evaluate(self.ref, self.hyp, self.labels)
        self.assertEqual(pooled['vowel'].frames, 30)
        for i in range(3):
            self.assertAlmostEqual(pooled['vowel'].fee_hz[i], single['vowel'].fee_hz[i], delta=1e-9)


class TestReportOutput(unittest.TestCase):

    def test_csv(self):
        ref = track([[1000, 1500, 2500], [1000, 1500, 2500]])
        hyp = track([[1290, 1500, 2500], [1400, 1500, 2500]])
        out = io.StringIO()
        write_report_csv(out, evaluate(ref, hyp))
        lines = out.getvalue().splitlines()
        self.assertEqual(lines[0], "category,formant,fdr_percent,fee_hz,mad_percent,frames")
        self.assertEqual(lines[1], "all,F1,50,345,34.5,2")
        self.assertEqual(lines[2], "all,F2,100,0,0,2")
        self.assertEqual(len(lines), 4)

    def test_table_marks_absent_cells(self):
        ref = track(np.tile([500, 1500, 2500], (10, 1)))
        labels = [PhoneSegment(0, 2000, 'iy')]
        table = report_table(evaluate(ref, ref, labels))
        self.assertIn('n/a', table)
        self.assertIn('vowel', table)
