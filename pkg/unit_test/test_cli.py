'''
Testing the hsketch command line
================================================================
Each subcommand is run through main() with temporary files, checking
the exit codes and the files written.

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import os, sys
import shutil
import tempfile
import unittest

# Third party libraries
import numpy as np
import pandas as pd

basepath = os.path.dirname(os.path.dirname(__file__))
sys.path.append(basepath)

# Local libraries
from hsketch.hsk_cli import main
from hsketch.hsk_storage import read_points,read_sketch,json_to_dataset
from hsketch.hsk_harness import gen_sphere
from hsketch.hsk_support import EXIT_OK,EXIT_USAGE,EXIT_PRECONDITION,EXIT_INTEGRITY,EXIT_VERIFICATION

#================================================================
#%% Tests
#================================================================
class TestCli(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.mkdtemp()
        self.points_file = self.path('points.txt')
        code = main(['gen','--n','6','--d','10','--min-dist','1.0','--seed','21',
                     '-o',self.points_file,'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)

    def tearDown(self):
        shutil.rmtree(self.folder,ignore_errors=True)

    def path(self,name):
        return os.path.join(self.folder,name)

    def sketch(self,name='points.hsk'):
        code = main(['sketch',self.points_file,'--epsilon','0.3','--seed','4','--n-constant','4',
                     '-o',self.path(name),'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)
        return self.path(name)


    def test_gen(self):
        self.assertEqual(read_points(self.points_file),gen_sphere(6,10,1.0,seed=21))

        ball_file = self.path('ball.txt')
        code = main(['gen','--mode','ball','--rho','0.25','--n','5','--d','4','--min-dist','0.5',
                     '--seed','2','-o',ball_file,'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)
        self.assertEqual(read_points(ball_file).mode,'ball')

        close_file = self.path('close.txt')
        code = main(['gen','--mode','close','--n','5','--d','4','--min-dist','0.1',
                     '--seed','2','-o',close_file,'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)
        X = read_points(close_file).points
        self.assertAlmostEqual(np.linalg.norm(X[0] - X[1]),0.1,places=12)


    def test_gen_preconditions(self):
        code = main(['gen','--n','6','--d','10','--min-dist','1.5','--seed','1',
                     '-o',self.path('x.txt'),'--verbosity','none'])
        self.assertEqual(code,EXIT_PRECONDITION)

        code = main(['gen','--mode','close','--n','6','--d','10','--min-dist','0.7','--seed','1',
                     '-o',self.path('x.txt'),'--verbosity','none'])
        self.assertEqual(code,EXIT_PRECONDITION)


    def test_plan_and_sketch_from_plan(self):
        plan_file = self.path('plan.txt')
        code = main(['plan',self.points_file,'--epsilon','0.3','--seed','4','--n-constant','4',
                     '-o',plan_file,'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)

        with open(plan_file,'r') as fh:
            text = fh.read()
        self.assertIn('jl_bits',text)

        from_plan = self.path('from_plan.hsk')
        code = main(['sketch',self.points_file,'--plan',plan_file,'-o',from_plan,'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)

        direct = read_sketch(self.sketch())
        self.assertTrue(np.array_equal(read_sketch(from_plan).words,direct.words))

        # an epsilon given next to the plan has to agree with it
        code = main(['sketch',self.points_file,'--plan',plan_file,'--epsilon','0.3',
                     '-o',self.path('same.hsk'),'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)
        code = main(['sketch',self.points_file,'--plan',plan_file,'--epsilon','0.25',
                     '-o',self.path('other.hsk'),'--verbosity','none'])
        self.assertEqual(code,EXIT_USAGE)
        self.assertFalse(os.path.exists(self.path('other.hsk')))


    def test_sketch_needs_plan_or_epsilon(self):
        code = main(['sketch',self.points_file,'--seed','4','-o',self.path('x.hsk'),'--verbosity','none'])
        self.assertEqual(code,EXIT_USAGE)


    def test_estimate(self):
        sketch_file = self.sketch()

        out = self.path('all.csv')
        code = main(['estimate',sketch_file,'--all','--truth',self.points_file,'-o',out,'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)
        df = pd.read_csv(out)
        self.assertEqual(len(df),15)
        self.assertTrue(np.all(df['rel_error']<0.3))

        out = self.path('pairs.csv')
        code = main(['estimate',sketch_file,'--pair','0','1','--pair','5','2','-o',out,'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)
        self.assertEqual(list(pd.read_csv(out).columns),['i','j','est_sq_dist'])

        pairs_file = self.path('pairs.txt')
        with open(pairs_file,'w') as fh:
            fh.write('# pairs\n0 1\n2,3\n')
        code = main(['estimate',sketch_file,'--pairs-file',pairs_file,'--diagnostics',
                     '-o',out,'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)
        self.assertIn('est_inner',pd.read_csv(out).columns)

        code = main(['estimate',sketch_file,'--pair','0','6','-o',out,'--verbosity','none'])
        self.assertEqual(code,EXIT_USAGE)


    def test_bad_files(self):
        bad = self.path('bad.hsk')
        with open(bad,'wb') as fh:
            fh.write(b'not a sketch file at all')
        self.assertEqual(main(['estimate',bad,'--all','--verbosity','none']),EXIT_INTEGRITY)

        self.assertEqual(main(['estimate',self.path('missing.hsk'),'--all','--verbosity','none']),EXIT_USAGE)

        bad_points = self.path('bad.txt')
        with open(bad_points,'w') as fh:
            fh.write('2 2 sphere\n1 0\n')
        code = main(['plan',bad_points,'--epsilon','0.3','--seed','1','--verbosity','none'])
        self.assertEqual(code,EXIT_INTEGRITY)


    def test_verify(self):
        points_file = self.path('ten.txt')
        main(['gen','--n','10','--d','16','--min-dist','1.0','--seed','3','-o',points_file,'--verbosity','none'])

        csv_file = self.path('trials.csv')
        json_file = self.path('trials.json')
        code = main(['verify',points_file,'--epsilon','0.3','--trials','12','--seed','100',
                     '--csv',csv_file,'--results',json_file,'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)
        self.assertEqual(len(pd.read_csv(csv_file)),12)
        self.assertIn('all_pairs_ok',json_to_dataset(json_file))

        # too few trials for the lower bound to reach the target
        code = main(['verify',points_file,'--epsilon','0.3','--trials','3','--seed','100','--verbosity','none'])
        self.assertEqual(code,EXIT_VERIFICATION)


    def test_verify_ablation(self):
        points_file = self.path('ten.txt')
        main(['gen','--n','10','--d','16','--min-dist','1.0','--seed','3','-o',points_file,'--verbosity','none'])

        args = ['verify',points_file,'--epsilon','0.3','--trials','5','--seed','100',
                '--n-scale','0.001','--verbosity','none']
        self.assertEqual(main(args + ['--expect-failures']),EXIT_OK)
        self.assertEqual(main(args),EXIT_VERIFICATION)


    def test_compare_jl(self):
        out = self.path('compare.csv')
        code = main(['compare-jl',self.points_file,'--epsilon','0.3','--trials','2','--seed','100',
                     '--n-constant','4','-o',out,'--verbosity','none'])
        # two trials cannot establish the target rate
        self.assertEqual(code,EXIT_VERIFICATION)
        self.assertEqual(pd.read_csv(out)['method'].tolist(),['hypersketch','jl'])


    def test_kernel(self):
        code = main(['kernel','--inner','0.5','--d','8','--D','20000','--trials','5','--seed','31',
                     '--verbosity','none'])
        self.assertEqual(code,EXIT_OK)


    def test_sweep(self):
        out = self.path('sweep.csv')
        code = main(['sweep','--check','-o',out,'--verbosity','none'])
        self.assertEqual(code,EXIT_OK)
        self.assertEqual(pd.read_csv(out)['ell'].tolist(),[2,3,3,4])


    def test_usage(self):
        self.assertEqual(main(['unknown']),EXIT_USAGE)
        self.assertEqual(main(['plan',self.points_file]),EXIT_USAGE)
        self.assertEqual(main(['--help']),EXIT_OK)

#================================================================
#%% Runner
#================================================================

if __name__ == '__main__':
    all_tests = False

    if all_tests:
        unittest.main()
    else:
        suite = unittest.TestSuite()

        suite.addTest(TestCli('test_gen'))
        suite.addTest(TestCli('test_estimate'))
        suite.addTest(TestCli('test_verify'))

        runner = unittest.TextTestRunner()
        runner.run(suite)
