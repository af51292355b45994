import numpy as np
from numpy.testing import assert_array_equal

from lpform.exceptions import LabelError
from lpform.phone_labels import (
    CATEGORIES, OTHER, PhoneSegment, map_phones_to_categories, read_category_map, read_phn,
)

from .common import LpformCase


class TestPhoneLabels(LpformCase):

    def test_read_phn(self):
        self.path('a.phn').write_text("0 1600 h#\n1600 3200 iy\n3200 4800 ay\n")
        segments = read_phn(self.path('a.phn'))
        self.assertEqual(segments[1], PhoneSegment(1600, 3200, 'iy'))
        self.assertEqual(len(segments), 3)

    def test_malformed_phn(self):
        self.path('b.phn').write_text("0 1600\n")
        with self.assertRaises(LabelError):
            read_phn(self.path('b.phn'))
        self.path('c.phn').write_text("1600 0 iy\n")
        with self.assertRaises(LabelError):
            read_phn(self.path('c.phn'))

    def test_default_map(self):
        mapping = read_category_map()
        self.assertEqual(mapping['iy'], 'vowel')
        self.assertEqual(mapping['ay'], 'diphthong')
        self.assertEqual(mapping['w'], 'semivowel')
        self.assertEqual(mapping['bcl'], 'voice_bar')
        self.assertEqual(mapping['h#'], OTHER)
        self.assertEqual(mapping['pau'], OTHER)
        self.assertTrue(set(mapping.values()) <= set(CATEGORIES) | {OTHER})

    def test_custom_map(self):
        self.path('map.txt').write_text("# custom\niy nasal\n")
        self.assertEqual(read_category_map(self.path('map.txt')), {'iy': 'nasal'})

    def test_custom_map_with_unknown_category(self):
        self.path('map.txt').write_text("iy vowels\n")
        with self.assertRaises(LabelError):
            read_category_map(self.path('map.txt'))

    def test_frames_take_the_category_of_their_segment(self):
        segments = [PhoneSegment(0, 1600, 'h#'), PhoneSegment(1600, 3200, 'iy'), PhoneSegment(3200, 4800, 'zz')]
        times = np.arange(35) * 0.01 + 0.005
        assignment = map_phones_to_categories(segments, times, labels_rate=16000)

        assert_array_equal(assignment.categories[:10], OTHER)
        assert_array_equal(assignment.categories[10:20], 'vowel')
        assert_array_equal(assignment.categories[20:30], OTHER)
        # beyond the last segment
        assert_array_equal(assignment.categories[30:], OTHER)
        self.assertEqual(assignment.unknown['zz'], 10)
        self.assertEqual(assignment.unknown_count, 10)

    def test_labels_rate(self):
        segments = [PhoneSegment(0, 800, 'iy')]
        assignment = map_phones_to_categories(segments, np.array([0.05, 0.15]), labels_rate=8000)
        assert_array_equal(assignment.categories, ['vowel', OTHER])
