'''
Testing the trial sequence framework
================================================================
Unit tests for measurements, setup conditions and trial sequences
derived from the hsk_core abstract classes.

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
import xarray as xr

basepath = os.path.dirname(os.path.dirname(__file__))
sys.path.append(basepath)

# Local libraries
from hsketch.hsk_core import AbstractMeasurement,AbstractTrialSequence,with_results
from hsketch.hsk_harness import SeedCondition
from hsketch.hsk_cascade import CascadeLayer
from hsketch.hsk_iterates import f_iter
from hsketch.hsk_support import PreconditionError

#================================================================
#%% Classes
#================================================================
class LayerAgreement(AbstractMeasurement):
    """
    Sign agreement of two unit vectors under one layer per seed
    """
    name = 'LayerAgreement'

    def initialise(self):
        inner = self.get_resource('inner')
        self.X = np.array([[1.0,0.0],[inner,np.sqrt(1 - inner**2)]])
        self.D = 512

    def meas_sequence(self,scale=1):
        seed = self.current_conditions.get('seed',0)
        bits = CascadeLayer(1,2,self.D,seed).project(self.X)
        agreement = 2*np.mean(bits[0]==bits[1]) - 1

        self.store_data_var('sketch_inner',agreement*scale)

        self.store_coords('level',[1,2])
        inner = self.X[1,0]
        self.store_data_var('level_value',[f_iter(inner,1),f_iter(inner,2)],coords=['level'])


class BrokenMeasurement(AbstractMeasurement):
    name = 'BrokenMeasurement'
    bad_coords = False

    def meas_sequence(self):
        if self.bad_coords:
            self.store_data_var('value',[1,2,3],coords=['unknown_coord'])
        raise PreconditionError('Point set does not match the plan')


class ToySequence(AbstractTrialSequence):
    name = 'ToySequence'

    def define_setup_conditions(self):
        self.add_setup_condition(SeedCondition,'seed')

    def define_measurements(self):
        self.add_measurement(LayerAgreement)

    def pre_process(self):
        self.information.inner = self.get_resource('inner')

    @with_results(coords=['seed'],data_vars=['sketch_inner'])
    def mean_inner(self):
        return float(self.ds_results['sketch_inner'].mean())


class BrokenSequence(ToySequence):
    name = 'BrokenSequence'

    def define_measurements(self):
        self.add_measurement(LayerAgreement)
        self.add_measurement(BrokenMeasurement)

#================================================================
#%% Tests
#================================================================
class TestMeasurement(unittest.TestCase):

    def setUp(self):
        self.resources = dict(inner=0.5)
        self.config = dict(verbosity='none')

    def tearDown(self):
        pass


    def test_no_conditions(self):
        meas = LayerAgreement(self.resources,config=self.config)

        ok = meas.run()
        self.assertTrue(ok,msg=f'Measurement [{meas.name}] failed to run')

        ds = meas.ds_results
        missing_coords = [c for c in ['default','level'] if c not in ds.coords]
        missing_data_vars = [d for d in ['sketch_inner','level_value'] if d not in ds]
        self.assertTrue(missing_coords==[],msg=f'Dataset is missing coordinates {missing_coords}')
        self.assertTrue(missing_data_vars==[],msg=f'Dataset is missing data vars {missing_data_vars}')
        self.assertEqual(ds['sketch_inner'].attrs['CLASS_TYPE'],'LayerAgreement')


    def test_single_conditions(self):
        meas = LayerAgreement(self.resources,config=self.config)

        ok = meas.run(conditions=dict(seed=3))
        self.assertTrue(ok,msg=f'Measurement [{meas.name}] failed to run')

        ds = meas.ds_results
        self.assertEqual(ds['level_value'].dims,('seed','level'))
        self.assertAlmostEqual(float(ds['level_value'].sel(seed=3,level=1)),1/3,places=12)
        self.assertTrue(-1<=float(meas.current_results['sketch_inner'])<=1)


    def test_multiple_conditions(self):
        """
        New conditions grow the dataset, repeated ones overwrite
        """
        meas = LayerAgreement(self.resources,config=self.config)

        self.assertTrue(meas.run(conditions=dict(seed=3)))
        first = float(meas.ds_results['sketch_inner'].sel(seed=3))

        self.assertTrue(meas.run(conditions=dict(seed=4)))
        self.assertEqual(meas.ds_results['seed'].values.tolist(),[3,4])

        self.assertTrue(meas.run(conditions=dict(seed=3),scale=2))
        self.assertEqual(meas.ds_results['seed'].values.tolist(),[3,4])
        self.assertAlmostEqual(float(meas.ds_results['sketch_inner'].sel(seed=3)),2*first,places=14)


    def test_errors_are_caught(self):
        meas = BrokenMeasurement({},config=self.config)
        ok = meas.run(conditions=dict(seed=1))
        self.assertFalse(ok)
        self.assertIn('PreconditionError',meas.last_error)

        meas.bad_coords = True
        self.assertFalse(meas.run(conditions=dict(seed=1)))
        self.assertIn('unknown coordinates',meas.last_error)


    def test_conditions_must_be_single_values(self):
        meas = LayerAgreement(self.resources,config=self.config)
        with self.assertRaises(ValueError):
            meas.run(conditions=dict(seed=[1,2]))


    def test_missing_resource(self):
        with self.assertRaises(ValueError):
            LayerAgreement({},config=self.config)


    def test_run_stages(self):
        meas = LayerAgreement(self.resources,config=self.config)
        self.assertIn('MAIN',meas.run_conditions)

        meas.run_on_startup(True)
        self.assertIn('STARTUP',meas.run_conditions)
        self.assertNotIn('MAIN',meas.run_conditions)

        meas.run_on_startup(False)
        meas.run_on_main(True)
        self.assertEqual(list(meas.run_conditions),['MAIN'])


class TestTrialSequence(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.mkdtemp()
        self.seq = ToySequence(dict(inner=0.3),config=dict(verbosity='none',n_scale=1.0))
        self.seq.conditions.seed.values = [1,2,3]

    def tearDown(self):
        shutil.rmtree(self.folder,ignore_errors=True)


    def test_got_conditions_and_meas(self):
        self.assertIn('seed',self.seq.conditions)
        for meas_name in ['Timestamp','LayerAgreement']:
            self.assertTrue(meas_name in self.seq.meas,msg=f'Meas [{meas_name}] failed to be loaded')


    def test_conditions_table(self):
        self.assertEqual(self.seq.conditions_table,[{'seed':1},{'seed':2},{'seed':3}])


    def test_running_order(self):
        df = self.seq.df_running_order
        self.assertEqual(list(df.columns),['Operation','Label','seed'])
        self.assertEqual(df['Label'].tolist(),['Timestamp','seed','LayerAgreement','seed',
                                               'LayerAgreement','seed','LayerAgreement'])

        self.seq.meas.LayerAgreement.enable = False
        self.assertEqual(self.seq.df_running_order['Label'].tolist(),['Timestamp','seed','seed','seed'])


    def test_run(self):
        ok = self.seq.run()
        self.assertTrue(ok,msg=f'Sequence failed\n{self.seq.last_error}')

        ds = self.seq.ds_results
        for coord in ['seed','level','timestamp']:
            self.assertIn(coord,ds.coords)
        self.assertNotIn('default',ds.dims)
        self.assertEqual(ds['sketch_inner'].sizes['seed'],3)
        self.assertEqual(ds.attrs['inner'],0.3)
        self.assertEqual(self.seq.conditions.seed.actual,3)

        self.assertTrue(-1<=self.seq.mean_inner()<=1)


    def test_run_selected_conditions(self):
        self.assertTrue(self.seq.run(conditions=[{'seed':7}]))
        self.assertEqual(self.seq.ds_results['seed'].values.tolist(),[7])

        with self.assertRaises(ValueError):
            self.seq.run(conditions={'seed':7})


    def test_with_results_guard(self):
        with self.assertRaises(ValueError):
            self.seq.mean_inner()


    def test_failing_measurement(self):
        seq = BrokenSequence(dict(inner=0.3),config=dict(verbosity='none'))
        seq.conditions.seed.values = [1,2]

        ok = seq.run()
        self.assertFalse(ok)
        self.assertIn('BrokenMeasurement',seq.last_error)

        # results of the measurements that did run are kept
        self.assertIn('sketch_inner',seq.ds_results)


    def test_save_and_load_results(self):
        filename = os.path.join(self.folder,'trials.json')
        self.seq.run()
        self.seq.save(filename)
        self.assertTrue(os.path.exists(filename),msg='Failed to save json file')

        new_seq = ToySequence(dict(inner=0.3),config=dict(verbosity='none'))
        new_seq.load(filename)
        self.assertTrue(self.seq.ds_results.equals(new_seq.ds_results),msg='Reloaded results are not equal')
        self.assertIn('sketch_inner',new_seq.meas.LayerAgreement.ds_results)

        meas = LayerAgreement(dict(inner=0.3),config=dict(verbosity='none'))
        meas.load(filename)
        self.assertCountEqual(list(meas.ds_results.data_vars),['sketch_inner','level_value'])


    def test_save_formats(self):
        self.seq.run()
        excel = os.path.join(self.folder,'trials.xlsx')
        csv = os.path.join(self.folder,'trials.csv')
        self.seq.save(excel,format='excel')
        self.seq.save(csv,format='csv')
        self.assertTrue(os.path.exists(excel))
        self.assertTrue(os.path.exists(csv))

        with self.assertRaises(ValueError):
            self.seq.save(os.path.join(self.folder,'trials.bin'),format='binary')


    def test_load_errors(self):
        with self.assertRaises(FileNotFoundError):
            self.seq.load(os.path.join(self.folder,'missing.json'))

        other = os.path.join(self.folder,'trials.txt')
        with open(other,'w') as fh:
            fh.write('{}')
        with self.assertRaises(ValueError):
            self.seq.load(other)


    def test_config_replace(self):
        self.seq.config_replace('n_scale',0.25)
        self.assertEqual(self.seq.config.n_scale,0.25)
        self.assertEqual(self.seq.meas.LayerAgreement.config.n_scale,0.25)
        self.assertEqual(self.seq.conditions.seed.config.n_scale,0.25)

        self.seq.config_replace('not_there',1)
        self.assertNotIn('not_there',self.seq.meas.LayerAgreement.config)

        self.seq.config_set('not_there',1)
        self.assertEqual(self.seq.meas.Timestamp.config.not_there,1)


    def test_stacking_multiple_runs(self):
        """
        Runs with different information can be concatenated
        """
        results = []
        for run in range(3):
            self.seq.information.point_set = f'set_{run}'
            self.seq.run(conditions=[{'seed':run}])
            results.append(self.seq.ds_results.expand_dims(point_set=[f'set_{run}']))

        ds_all = xr.concat(results,dim='point_set')
        self.assertEqual(ds_all.coords['point_set'].size,3)

#================================================================
#%% Runner
#================================================================

if __name__ == '__main__':
    all_tests = False

    if all_tests:
        unittest.main()
    else:
        suite = unittest.TestSuite()

        suite.addTest(TestMeasurement('test_no_conditions'))
        suite.addTest(TestMeasurement('test_multiple_conditions'))
        suite.addTest(TestTrialSequence('test_run'))
        suite.addTest(TestTrialSequence('test_save_and_load_results'))

        runner = unittest.TextTestRunner()
        runner.run(suite)
