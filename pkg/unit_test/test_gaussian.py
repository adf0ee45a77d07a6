'''
Testing counter-based Gaussian rows
================================================================
Regenerated rows must not depend on the order or size of the requests
that produce them.

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import os, sys
import unittest

# Third party libraries
import numpy as np
from scipy import stats

basepath = os.path.dirname(os.path.dirname(__file__))
sys.path.append(basepath)

# Local libraries
from hsketch.hsk_gaussian import (gaussian_rows,gaussian_tile,check_seed,uniforms_from_raw,
                                  ROW_BLOCK,COL_BLOCK,JL_STREAM)

#================================================================
#%% Tests
#================================================================
class TestGaussian(unittest.TestCase):

    def setUp(self):
        pass

    def tearDown(self):
        pass


    def test_deterministic(self):
        a = gaussian_rows(42,1,0,10,7)
        b = gaussian_rows(42,1,0,10,7)
        self.assertTrue(np.array_equal(a,b))
        self.assertEqual(a.shape,(10,7))


    def test_row_ranges_agree(self):
        """
        Any row range is a slice of the full matrix
        """
        full = gaussian_rows(3,2,0,3*ROW_BLOCK,9)
        part = gaussian_rows(3,2,ROW_BLOCK - 5,2*ROW_BLOCK + 7,9)
        self.assertTrue(np.array_equal(full[ROW_BLOCK - 5:2*ROW_BLOCK + 7],part))
        self.assertEqual(gaussian_rows(3,2,4,4,9).shape,(0,9))


    def test_wide_rows_span_tiles(self):
        """
        Rows wider than a tile are the narrow rows extended, never reshuffled
        """
        wide = gaussian_rows(8,1,0,4,COL_BLOCK + 10)
        narrow = gaussian_rows(8,1,0,4,5)
        self.assertTrue(np.array_equal(wide[:,:5],narrow))

        tile = gaussian_tile(8,1,0,1,10)
        self.assertTrue(np.array_equal(wide[:,COL_BLOCK:],tile[:4]))


    def test_streams_and_seeds_differ(self):
        base = gaussian_rows(1,1,0,4,4)
        self.assertFalse(np.array_equal(base,gaussian_rows(1,2,0,4,4)))
        self.assertFalse(np.array_equal(base,gaussian_rows(2,1,0,4,4)))
        self.assertFalse(np.array_equal(base,gaussian_rows(1,JL_STREAM,0,4,4)))


    def test_standard_normal(self):
        samples = gaussian_rows(11,1,0,2*ROW_BLOCK,200).ravel()
        self.assertAlmostEqual(float(samples.mean()),0.0,delta=0.02)
        self.assertAlmostEqual(float(samples.std()),1.0,delta=0.02)

        result = stats.kstest(samples,'norm')
        self.assertTrue(result.pvalue>1e-4,msg=f'KS test p value [{result.pvalue}]')


    def test_uniforms_inside_unit_interval(self):
        raw = np.array([0,2**64 - 1],dtype=np.uint64)
        u = uniforms_from_raw(raw)
        self.assertTrue(np.all((u>0) & (u<1)))
        self.assertTrue(np.all(np.isfinite(gaussian_rows(0,1,0,1,3))))


    def test_seed_validation(self):
        self.assertEqual(check_seed(2**64 - 1),2**64 - 1)
        for bad in (-1,2**64,1.5):
            with self.assertRaises(ValueError):
                check_seed(bad)
        with self.assertRaises(ValueError):
            gaussian_rows(1,1,5,2,3)

#================================================================
#%% Runner
#================================================================

if __name__ == '__main__':
    all_tests = False

    if all_tests:
        unittest.main()
    else:
        suite = unittest.TestSuite()

        suite.addTest(TestGaussian('test_row_ranges_agree'))
        suite.addTest(TestGaussian('test_wide_rows_span_tiles'))

        runner = unittest.TextTestRunner()
        runner.run(suite)
