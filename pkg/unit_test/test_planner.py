'''
Testing the cascade planner
================================================================
Unit tests for PointSet and hsk_planner: measured (m, r, rho), the
level count, the dimension schedule and plan validation.

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import os, sys, math
import unittest

# Third party libraries
import numpy as np

basepath = os.path.dirname(os.path.dirname(__file__))
sys.path.append(basepath)

# Local libraries
from hsketch.hsk_pointset import PointSet
from hsketch.hsk_planner import (make_plan,measure,measure_detail,levels_for_min_distance,
                                 working_epsilon,dimension_schedule,schedule,bit_budget,
                                 scale_final_dimension,with_seed,check_plan_compatible,
                                 asymptotic_bits,CascadePlan)
from hsketch.hsk_support import PreconditionError,DegenerateInputError

#================================================================
#%% Functions
#================================================================
def unit_rows(rows):
    rows = np.asarray(rows,dtype=float)
    return rows/np.linalg.norm(rows,axis=1)[:,None]

#================================================================
#%% Tests
#================================================================
class TestPointSet(unittest.TestCase):

    def test_sphere_norms(self):
        ps = PointSet(np.eye(3),'sphere')
        self.assertEqual((ps.n,ps.d,len(ps)),(3,3,3))
        with self.assertRaises(PreconditionError):
            PointSet([[1.0,0.0],[0.5,0.0]],'sphere')


    def test_ball_checks(self):
        ps = PointSet([[0.5,0.0],[0.0,0.3]],'ball')
        self.assertTrue(np.allclose(ps.normalized(),np.eye(2)))
        with self.assertRaises(DegenerateInputError):
            PointSet([[0.5,0.0],[0.0,0.0]],'ball')
        with self.assertRaises(PreconditionError):
            PointSet([[1.5,0.0],[0.0,0.3]],'ball')


    def test_bad_input(self):
        with self.assertRaises(ValueError):
            PointSet([1.0,0.0],'sphere')
        with self.assertRaises(ValueError):
            PointSet([[np.nan,1.0]],'ball')
        with self.assertRaises(ValueError):
            PointSet(np.eye(2),'cube')


    def test_immutable_and_equal(self):
        ps = PointSet(np.eye(2),'sphere')
        with self.assertRaises(ValueError):
            ps.points[0,0] = 2.0
        self.assertEqual(ps,PointSet(np.eye(2),'sphere'))
        self.assertEqual(ps.subset([1]).points.tolist(),[[0.0,1.0]])


class TestPlanner(unittest.TestCase):

    def setUp(self):
        # directions at 0, 60 and 135 degrees
        self.points = PointSet(unit_rows([[1,0],[0.5,math.sqrt(3)/2],[-1,1]]),'sphere')

    def tearDown(self):
        pass


    def test_measure_orthonormal(self):
        m,r,rho = measure(PointSet(np.eye(2),'sphere'))
        self.assertAlmostEqual(m,math.sqrt(2),places=14)
        self.assertAlmostEqual(r,2.0,places=14)
        self.assertEqual(rho,1.0)


    def test_measure_detail(self):
        """
        Closest pair is 60 degrees apart, the largest |<x,y>| is cos 45 degrees
        """
        detail = measure_detail(self.points)
        self.assertAlmostEqual(detail.m,1.0,places=12)
        self.assertEqual(detail.min_dist_pair,(0,1))

        # points 1 and 2 are 75 degrees apart, points 0 and 2 are 135
        gap = 1 - math.cos(math.radians(45))
        self.assertAlmostEqual(detail.min_gap,gap,places=12)
        self.assertEqual(detail.min_gap_pair,(0,2))
        self.assertAlmostEqual(detail.r,2/math.sqrt(gap),places=10)


    def test_measure_ball_rho(self):
        ps = PointSet([[0.5,0.0],[0.0,0.8]],'ball')
        self.assertAlmostEqual(measure(ps)[2],0.25,places=14)


    def test_degenerate(self):
        with self.assertRaises(DegenerateInputError):
            measure(PointSet([[1.0,0.0],[1.0,0.0]],'sphere'))
        with self.assertRaises(DegenerateInputError):
            measure(PointSet([[1.0,0.0],[-1.0,0.0]],'sphere'))
        with self.assertRaises(DegenerateInputError):
            measure(PointSet([[0.5,0.0],[0.25,0.0]],'ball'))
        with self.assertRaises(PreconditionError):
            measure(PointSet([[1.0,0.0]],'sphere'))


    def test_levels(self):
        cases = [(2.0,1),(math.sqrt(2),1),(1.0,1),(0.99,2),(0.25,2),(0.2,3),(0.01,4)]
        for m,ell in cases:
            self.assertEqual(levels_for_min_distance(m),ell,msg=f'Wrong level count for m = {m}')
        with self.assertRaises(ValueError):
            levels_for_min_distance(0.0)


    def test_levels_bound_growth(self):
        """
        (1/m)^(2^(1-l)) stays below 4 for the chosen level count
        """
        for m in np.geomspace(1e-12,math.sqrt(2),2000):
            ell = levels_for_min_distance(m)
            growth = (1/m)**(2.0**(1 - ell))
            self.assertTrue(growth<4,msg=f'm = {m}, ell = {ell} gives [{growth}]')


    def test_dimensions_decrease(self):
        """
        D_1 >= ... >= D_l over random (m, r, n, eps)
        """
        rng = np.random.default_rng(17)
        for _ in range(500):
            m = float(np.exp(rng.uniform(math.log(1e-3),math.log(math.sqrt(2)))))
            r = float(rng.uniform(2,2*math.sqrt(2)/m))
            epsilon = float(rng.uniform(0.05,0.95))*min(m**2/2,0.99)
            n = int(rng.integers(2,100000))

            dims = schedule(n,m,r,epsilon).dims
            self.assertTrue(all(a>=b for a,b in zip(dims,dims[1:])),
                            msg=f'Dimensions {dims} for m = {m}, r = {r}, n = {n}, eps = {epsilon}')


    def test_measure_against_all_pairs(self):
        """
        measure() agrees with a direct loop over every pair
        """
        rng = np.random.default_rng(23)
        X = unit_rows(rng.standard_normal((50,5)))
        norms = rng.uniform(0.5,1.0,size=50)

        m_naive = min(np.linalg.norm(X[i] - X[j]) for i in range(50) for j in range(i+1,50))
        r_naive = max(2/math.sqrt(1 - abs(X[i] @ X[j])) for i in range(50) for j in range(i+1,50))

        m,r,rho = measure(PointSet(X,'sphere'))
        self.assertAlmostEqual(m,m_naive,places=10)
        self.assertTrue(math.isclose(r,r_naive,rel_tol=1e-8),msg=f'r [{r}] vs [{r_naive}]')
        self.assertEqual(rho,1.0)

        m,r,rho = measure(PointSet(X*norms[:,None],'ball'))
        self.assertAlmostEqual(m,m_naive,places=10)
        self.assertTrue(math.isclose(r,r_naive,rel_tol=1e-8))
        self.assertAlmostEqual(rho,float(norms.min()**2),places=12)


    def test_working_epsilon(self):
        self.assertEqual(working_epsilon(0.2,'sphere'),0.05)
        self.assertEqual(working_epsilon(0.32,'ball'),0.01)
        self.assertEqual(working_epsilon(0.2,'ball','additive'),0.2)
        with self.assertRaises(ValueError):
            working_epsilon(0.2,'sphere','relative')


    def test_dimension_schedule(self):
        """
        The last dimension does not depend on r, earlier ones grow with it
        """
        delta = 0.01
        dims = dimension_schedule(100,3.0,3,delta)
        self.assertEqual(dims[-1],math.ceil(24*math.log(100)/delta**2))
        self.assertEqual(dimension_schedule(100,5.0,3,delta)[-1],dims[-1])
        self.assertTrue(dimension_schedule(100,5.0,3,delta)[0]>dims[0])

        expected_first = math.ceil(24*4**2*3.0**(6*((2/3) - (2/3)**3))*math.log(100)/delta**2)
        self.assertEqual(dims[0],expected_first)


    def test_schedule(self):
        params = schedule(100,0.3,2.0,0.2)
        delta = (0.05/math.sqrt(2))*(math.sqrt(2)/math.pi)**2
        self.assertEqual(params.ell,2)
        self.assertAlmostEqual(params.delta,delta,places=15)
        self.assertEqual(params.dims[-1],math.ceil(24*math.log(100)/delta**2))
        self.assertIsNone(params.norm_step)

        ball = schedule(100,0.3,2.0,0.2,mode='ball',rho=0.25)
        self.assertAlmostEqual(ball.norm_step,0.25*0.09*0.2/48,places=15)

        for bad in (0.0,1.0):
            with self.assertRaises(ValueError):
                schedule(100,0.3,2.0,bad)


    def test_make_plan(self):
        plan = make_plan(self.points,0.2,master_seed=9)
        self.assertEqual((plan.n,plan.d,plan.mode,plan.ell),(3,2,'sphere',1))
        self.assertEqual(plan.master_seed,9)
        self.assertEqual(plan.N,plan.dims[-1])
        self.assertEqual(plan.bit_budget,3*plan.N)
        self.assertAlmostEqual(plan.target_rate,1/3,places=14)
        self.assertEqual(plan.target,'multiplicative')


    def test_n_constant(self):
        full = make_plan(self.points,0.2,1)
        small = make_plan(self.points,0.2,1,config=dict(n_constant=12.0))
        self.assertTrue(abs(small.N*4 - full.N)<=4,msg=f'N does not scale with n_constant ({small.N}, {full.N})')


    def test_epsilon_hypothesis(self):
        """
        eps must be below the smallest 1-|<x,y>|, the message names the pair
        """
        with self.assertRaises(PreconditionError) as ctx:
            make_plan(self.points,0.5,1)
        self.assertIn('(0, 2)',str(ctx.exception))

        with self.assertRaises(PreconditionError):
            make_plan(self.points,0.0,1)


    def test_ball_plan(self):
        ps = PointSet([[0.6,0.0],[0.0,0.9]],'ball')
        plan = make_plan(ps,0.3,1)
        self.assertAlmostEqual(plan.rho,0.36,places=14)
        self.assertAlmostEqual(plan.norm_step,0.36*2*0.3/48,places=14)
        self.assertEqual(plan.norm_bits,math.ceil(math.log2(1/plan.norm_step)))
        self.assertEqual(plan.bit_budget,2*plan.N + 2*plan.norm_bits)
        self.assertAlmostEqual(plan.working_epsilon,0.3/32,places=15)


    def test_level_bound(self):
        plan = CascadePlan(n=10,d=2,mode='sphere',epsilon=0.1,m=0.5,r=4.0,rho=1.0,
                           ell=2,dims=(100,50),master_seed=0,delta=0.01,working_epsilon=0.025)
        self.assertAlmostEqual(plan.level_bound(2),0.01,places=15)
        self.assertAlmostEqual(plan.level_bound(1),0.01/(2*4.0**(3*(2/3 - 4/9))),places=15)
        self.assertAlmostEqual(float(plan.additive_bound(1.0)),0.025,places=15)


    def test_plan_validation(self):
        with self.assertRaises(AssertionError):
            CascadePlan(n=2,d=2,mode='sphere',epsilon=0.1,m=1.0,r=2.0,rho=1.0,
                        ell=2,dims=(10,),master_seed=0)
        with self.assertRaises(AssertionError):
            CascadePlan(n=2,d=2,mode='ball',epsilon=0.1,m=1.0,r=2.0,rho=1.0,
                        ell=1,dims=(10,),master_seed=0)


    def test_plan_helpers(self):
        plan = make_plan(self.points,0.2,1)
        self.assertEqual(bit_budget(plan),plan.bit_budget)

        scaled = scale_final_dimension(plan,0.25)
        self.assertEqual(scaled.N,math.ceil(plan.N*0.25))
        self.assertEqual(scaled.dims[:-1],plan.dims[:-1])

        self.assertEqual(with_seed(plan,77).master_seed,77)
        self.assertEqual(with_seed(plan,77).dims,plan.dims)


    def test_check_plan_compatible(self):
        plan = make_plan(self.points,0.2,1)
        check_plan_compatible(plan,self.points)

        with self.assertRaises(PreconditionError):
            check_plan_compatible(plan,PointSet(np.eye(2),'sphere'))

        moved = PointSet(unit_rows([[1,0],[0.5,0.8],[-1,1]]),'sphere')
        with self.assertRaises(PreconditionError):
            check_plan_compatible(plan,moved)


    def test_asymptotic_bits(self):
        exponent = 2*math.log2(math.pi/math.sqrt(2))
        value = asymptotic_bits(100,0.25,0.2)
        self.assertAlmostEqual(value,100*math.log(100)/0.04*4**exponent,places=6)

#================================================================
#%% Runner
#================================================================

if __name__ == '__main__':
    all_tests = False

    if all_tests:
        unittest.main()
    else:
        suite = unittest.TestSuite()

        suite.addTest(TestPlanner('test_measure_detail'))
        suite.addTest(TestPlanner('test_levels'))
        suite.addTest(TestPlanner('test_make_plan'))

        runner = unittest.TextTestRunner()
        runner.run(suite)
