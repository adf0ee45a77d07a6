'''
Testing cascade sign sketches
================================================================
Unit tests for hsk_cascade: layer projection, determinism across
thread counts and batch sizes, ball mode norms and bundle handling.

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import os, sys
import unittest

# Third party libraries
import numpy as np

basepath = os.path.dirname(os.path.dirname(__file__))
sys.path.append(basepath)

# Local libraries
from hsketch.hsk_pointset import PointSet
from hsketch.hsk_planner import CascadePlan,make_plan
from hsketch.hsk_cascade import (CascadeLayer,SketchBundle,project_signs,sign_feature_map,
                                 sketch_point,sketch_set,sketch_levels,extend_bundle,
                                 quantize_norms,dequantize_norms,cascade_layers)
from hsketch.hsk_signsketch import inner_product
from hsketch.hsk_support import DimensionMismatchError,DegenerateInputError,PreconditionError

#================================================================
#%% Functions
#================================================================
def small_plan(n,d,dims,mode='sphere',master_seed=5,norm_step=None):
    """Hand made plan, small enough to sketch in a unit test"""
    return CascadePlan(n=n,d=d,mode=mode,epsilon=0.2,m=1.0,r=3.0,rho=0.25,
                       ell=len(dims),dims=dims,master_seed=master_seed,norm_step=norm_step)


def random_sphere(n,d,seed):
    X = np.random.default_rng(seed).standard_normal((n,d))
    return PointSet(X/np.linalg.norm(X,axis=1)[:,None],'sphere')

#================================================================
#%% Tests
#================================================================
class TestCascade(unittest.TestCase):

    def setUp(self):
        self.points = random_sphere(7,12,seed=1)
        self.plan = small_plan(7,12,(600,300))

    def tearDown(self):
        pass


    def test_project_signs_ties(self):
        """
        sign(0) is +1
        """
        bits = project_signs(np.array([[1.0,0.0]]),np.array([[0.0,1.0],[-1.0,0.0]]))
        self.assertEqual(bits.tolist(),[[True,False]])

        with self.assertRaises(DimensionMismatchError):
            project_signs(np.ones((1,3)),np.ones((2,2)))


    def test_layer_matches_dense_product(self):
        """
        Tile by tile accumulation equals sign(Z x) with the full matrix
        """
        layer = CascadeLayer(1,12,600,master_seed=5)
        X = self.points.points

        dense = project_signs(X,layer.rows())
        self.assertTrue(np.array_equal(layer.project(X),dense))


    def test_layer_on_sign_patterns(self):
        layer = CascadeLayer(2,40,300,master_seed=5)
        bits = np.random.default_rng(2).random((3,40))>0.5

        dense = project_signs(np.where(bits,1.0,-1.0),layer.rows())
        self.assertTrue(np.array_equal(layer.project(bits),dense))


    def test_workers_do_not_change_bits(self):
        layer = CascadeLayer(1,12,1000,master_seed=9)
        X = self.points.points
        self.assertTrue(np.array_equal(layer.project(X,workers=1),layer.project(X,workers=4)))

        single = sketch_set(self.points,self.plan,dict(workers=1,point_batch=256))
        threaded = sketch_set(self.points,self.plan,dict(workers=3,point_batch=2))
        self.assertEqual(single,threaded)


    def test_point_independence(self):
        """
        A point's sketch does not depend on the other points
        """
        bundle = sketch_set(self.points,self.plan)
        for i in (0,3,6):
            alone = sketch_point(self.points.points[i],self.plan)
            self.assertEqual(alone,bundle.sketch(i),msg=f'Point {i} sketch depends on its neighbours')


    def test_seed_changes_sketch(self):
        other = sketch_set(self.points,small_plan(7,12,(600,300),master_seed=6))
        self.assertNotEqual(sketch_set(self.points,self.plan),other)


    def test_levels(self):
        levels = sketch_levels(self.points,self.plan)
        self.assertEqual([w.shape for w in levels],[(7,10),(7,5)])

        bundle = sketch_set(self.points,self.plan)
        self.assertTrue(np.array_equal(levels[-1],bundle.words))


    def test_sign_feature_map(self):
        layer = cascade_layers(self.plan)[0]
        v = sign_feature_map(self.points.points[2],layer)
        self.assertEqual(v.nbits,600)

        with self.assertRaises(DegenerateInputError):
            sign_feature_map(np.zeros(12),layer)
        with self.assertRaises(DimensionMismatchError):
            sign_feature_map(np.ones(5),layer)


    def test_antipodal_sketches(self):
        """
        The first layer maps -x to the complement of x, up to ties
        """
        layer = CascadeLayer(1,12,512,master_seed=3)
        x = self.points.points[0]
        a = sign_feature_map(x,layer)
        b = sign_feature_map(-x,layer)
        self.assertEqual(inner_product(a,b),-1.0)


    def test_antipodal_through_cascade(self):
        """
        Later layers keep complementary patterns complementary
        """
        for k in range(3):
            x = self.points.points[k]
            a = sketch_point(x,self.plan)
            b = sketch_point(-x,self.plan)
            self.assertEqual(inner_product(a,b),-1.0,msg=f'Point {k} and its antipode')


    def test_scale_invariance(self):
        layer = cascade_layers(self.plan)[0]
        x = self.points.points[4]
        self.assertEqual(sign_feature_map(x,layer),sign_feature_map(3*x,layer))
        self.assertEqual(sign_feature_map(x,layer),sign_feature_map(0.01*x,layer))


    def test_ball_mode(self):
        X = random_sphere(5,6,seed=4).points*np.array([0.5,0.6,0.7,0.8,1.0])[:,None]
        points = PointSet(X,'ball')
        plan = small_plan(5,6,(256,),mode='ball',norm_step=1e-4)

        bundle = sketch_set(points,plan)
        self.assertEqual(bundle.norm_indices.dtype,np.uint32)
        self.assertTrue(np.all(np.abs(bundle.norms() - points.norms)<=0.5e-4 + 1e-15))

        # directions only go into the sign bits
        directions = PointSet(points.normalized(),'sphere')
        sphere_plan = small_plan(5,6,(256,))
        self.assertTrue(np.array_equal(bundle.words,sketch_set(directions,sphere_plan).words))


    def test_norm_quantiser(self):
        indices = quantize_norms([0.5,0.123456],0.001)
        self.assertEqual(indices.tolist(),[500,123])
        self.assertTrue(np.allclose(dequantize_norms(indices,0.001),[0.5,0.123]))
        with self.assertRaises(ValueError):
            quantize_norms([1.0],1e-10)


    def test_mismatched_points(self):
        with self.assertRaises(DimensionMismatchError):
            sketch_set(random_sphere(7,5,seed=0),self.plan)
        with self.assertRaises(PreconditionError):
            sketch_set(random_sphere(4,12,seed=0),self.plan)
        with self.assertRaises(PreconditionError):
            sketch_set(PointSet(self.points.points*0.5,'ball'),self.plan)


    def test_extend_bundle(self):
        bundle = sketch_set(self.points.subset(range(4)),small_plan(4,12,(600,300)))
        extended = extend_bundle(bundle,self.points.subset(range(4,7)))

        self.assertEqual(extended.n,7)
        self.assertEqual(extended.plan.n,7)
        self.assertEqual(extended,sketch_set(self.points,self.plan))


    def test_bundle_validation(self):
        words = np.zeros((7,5),dtype=np.uint64)
        bundle = SketchBundle(self.plan,words)
        self.assertEqual(bundle.signs().shape,(7,300))
        self.assertTrue(np.all(bundle.norms()==1))

        with self.assertRaises(DimensionMismatchError):
            SketchBundle(self.plan,np.zeros((7,4),dtype=np.uint64))
        with self.assertRaises(PreconditionError):
            SketchBundle(self.plan,words,norm_indices=np.ones(7))


    def test_planned_sketch(self):
        """
        Sketch length and bit budget of a real plan
        """
        points = PointSet(np.eye(3),'sphere')
        plan = make_plan(points,0.3,master_seed=11)
        bundle = sketch_set(points,plan)
        self.assertEqual((bundle.n,bundle.nbits),(3,plan.N))
        self.assertEqual(bundle.n*bundle.nbits,plan.bit_budget)

#================================================================
#%% Runner
#================================================================

if __name__ == '__main__':
    all_tests = False

    if all_tests:
        unittest.main()
    else:
        suite = unittest.TestSuite()

        suite.addTest(TestCascade('test_layer_matches_dense_product'))
        suite.addTest(TestCascade('test_workers_do_not_change_bits'))
        suite.addTest(TestCascade('test_point_independence'))

        runner = unittest.TextTestRunner()
        runner.run(suite)
