'''
Trial sequence core classes
================================================================
A small framework for running Monte-Carlo trials.

A trial sequence holds setup conditions (e.g. the master seed) and
measurements (e.g. sketch and check a point set). It steps through every
combination of condition values, runs the enabled measurements at each
and merges what they store into one xarray Dataset, with the conditions
as coordinates.

TrialSequence
- SetupConditions
- Measurement

Example of use
--------------

>>> seq = CascadeTrialSequence(dict(points=points,plan=plan),config=config)
>>> seq.conditions.seed.values = [0,1,2,3]
>>> seq.meas.JlTrial.enable = False
>>> seq.run()
True
>>> seq.ds_results

A measurement can also be run on its own at one condition

>>> seq.meas.CascadeTrial.run(dict(seed=7))

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import os, time
import datetime
import abc
import traceback
import itertools
import copy

# Third party libraries
import numpy as np
import pandas as pd
import xarray as xr

# Local libraries
from .hsk_support import ObjDict,debugPrintout
from .hsk_storage import json_to_dataset

#================================================================
#%% Constants
#================================================================
# Running order operations
OP_MEAS = 'MEASUREMENT'
OP_COND = 'CONDITION'

# Data variable attribute naming the class that stored it
TAG_CLASSNAME = 'CLASS_TYPE'

# Coordinate used when a measurement runs without conditions
DEFAULT_COORD = 'default'

SAVE_FORMATS = ('json','excel','csv')

#================================================================
#%% Decorator Functions
#================================================================
def timed_run(func):
    """
    Log how long a run() method took, in self.run_time_s

    @timed_run
    def run(self)
    """

    def wrapper(self,*arg,**kwargs):
        start = time.time()
        self.log(f'Running {self.name}')

        res = func(self,*arg,**kwargs)

        self.run_time_s = time.time() - start
        if self.run_time_s < 60:
            self.log(f'{self.name} took {self.run_time_s:.3f} s')
        else:
            self.log(f'{self.name} took {self.run_time_s/60:.3f} min')
        return res

    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


def with_results(coords=[],data_vars=[]):
    """
    Guard a method that needs ds_results to hold given coordinates and
    data variables

    @with_results(coords=['seed'],data_vars=['all_pairs_ok'])
    def per_trial_frame(self):
        ...

    Raises
    ------
    ValueError
        no results yet, or some of the names are missing
    """
    coords = [coords] if isinstance(coords,str) else list(coords)
    data_vars = [data_vars] if isinstance(data_vars,str) else list(data_vars)

    def decorator(func):

        def wrapper(self,*arg,**kwargs):
            ds = getattr(self,'ds_results',None)
            if ds is None:
                raise ValueError(f'[{self.name}] has no results to process, run it first')

            missing = [c for c in coords if c not in ds.coords] + [d for d in data_vars if d not in ds]
            if missing:
                raise ValueError(f'[{self.name}] results are missing {missing}')

            return func(self,*arg,**kwargs)

        wrapper.__name__ = func.__name__
        wrapper.__doc__ = func.__doc__
        return wrapper

    return decorator

#================================================================
#%% Common utility class
#================================================================
class CommonUtility():
    """
    Resources, results storage and config handling shared by sequences,
    measurements and setup conditions
    """
    RUN_STAGE_STARTUP = 'STARTUP'
    RUN_STAGE_MAIN = 'MAIN'

    def get_resource(self,label):
        """
        Item from the resources dict

        >>> self.plan = self.get_resource('plan')

        Raises
        ------
        ValueError
            no resource of that name
        """
        if label not in self.resources:
            raise ValueError(f'[{self.name or self.__class__.__name__}] needs resource [{label}], have {list(self.resources)}')

        return self.resources[label]

    #----------------------------------------------------------------
    #%% Results dataset
    #----------------------------------------------------------------
    def clear_results(self):
        self.ds_results = None


    def set_conditions(self,conditions):
        """
        Make sure every condition value is a coordinate of ds_results

        New values grow the dataset, existing data variables are padded
        with NaN.

        Parameters
        ----------
        conditions : dict
            one single value per condition, e.g. {'seed':7}

        Raises
        ------
        ValueError
            a condition has several values
        """
        multi = [key for key,value in conditions.items() if np.ndim(value)>0]
        if multi:
            raise ValueError(f'Conditions must be single values, got several for {multi}')

        ds_new = xr.Dataset(coords={name:[value] for name,value in conditions.items()})

        if self.ds_results is None:
            self.ds_results = ds_new
        else:
            self.ds_results = xr.merge([self.ds_results,ds_new])


    def store_data_var(self,name,data_values,coords=[]):
        """
        Write values into data variable `name` at the current conditions

        The variable is created on first use, NaN filled and tagged with
        the storing class, over the current conditions plus `coords`.

        Parameters
        ----------
        name : str
        data_values : scalar or array
            one value per point of the extra coordinates
        coords : list or dict, optional
            extra coordinates made with store_coords(), e.g. ['level'].
            A dict selects single values, e.g. {'level':2}

        Raises
        ------
        ValueError
            unknown coordinates or a shape that does not fit them
        """
        if isinstance(coords,(list,tuple)):
            coords = {c:None for c in coords}

        coordinates = copy.deepcopy(self.current_conditions)
        coordinates.update(coords)

        if not coordinates:
            raise ValueError(f'Data variable [{name}] has no coordinates, no conditions are active')

        missing = [c for c in coordinates if c not in self.ds_results.coords]
        if missing:
            raise ValueError(f'Data variable [{name}] refers to unknown coordinates {missing}')

        if name not in self.ds_results:
            shape = tuple(self.ds_results.coords[c].size for c in coordinates)
            self.ds_results[name] = (list(coordinates),np.full(shape,np.nan))
            self.ds_results[name].attrs[TAG_CLASSNAME] = self.__class__.__name__

        selection = {k:v for k,v in coordinates.items() if v is not None}
        target_shape = self.ds_results[name].sel(selection).shape

        values = np.asarray(data_values)
        if values.size!=int(np.prod(target_shape)):
            raise ValueError(f'[{name}] needs {int(np.prod(target_shape))} value(s) for coordinates {coordinates}, got shape {values.shape}')

        self.ds_results[name].loc[selection] = values.reshape(target_shape)


    def store_coords(self,name,values):
        """
        Add a coordinate to ds_results, or check it against the existing one

        Raises
        ------
        ValueError
            the coordinate exists with other values
        """
        values = np.asarray(values)

        if self.ds_results is None:
            self.ds_results = xr.Dataset()

        if name not in self.ds_results.coords:
            self.ds_results.coords[name] = values
            return

        existing = self.ds_results.coords[name].values
        if existing.shape!=values.shape or not np.array_equal(existing,values):
            raise ValueError(f'Coordinate [{name}] already holds {existing.tolist()}, cannot store {values.tolist()}')

    #----------------------------------------------------------------
    #%% Saving/loading
    #----------------------------------------------------------------
    def save(self,filename,format='json'):
        """
        Write ds_results as 'json' (default), 'excel' or 'csv'
        """
        format = format.lower()
        if format not in SAVE_FORMATS:
            raise ValueError(f'Save format must be one of {SAVE_FORMATS} not [{format}]')

        writer = dict(json=self.ds_results.save.to_json,
                      excel=self.ds_results.save.to_excel,
                      csv=self.ds_results.save.to_csv)[format]
        writer(filename)


    def load(self,filename):
        """
        Read ds_results back from a .json file

        A measurement keeps only the data variables tagged with its class.
        A sequence keeps everything and hands each measurement its part.

        Raises
        ------
        FileNotFoundError
        ValueError
            not a .json file, or nothing in it for this class
        """
        if not os.path.exists(filename):
            raise FileNotFoundError(f'Cannot find file at [{filename}]')

        if os.path.splitext(filename)[1].lower()!='.json':
            raise ValueError(f'Results are loaded from .json files only, not [{filename}]')

        ds = json_to_dataset(filename)

        if isinstance(self,AbstractTrialSequence):
            self.ds_results = ds
            for meas in self.meas.values():
                own = ds.filter_by_attrs(**{TAG_CLASSNAME:meas.__class__.__name__})
                if len(own.data_vars)>0:
                    meas.ds_results = own
            return

        own = ds.filter_by_attrs(**{TAG_CLASSNAME:self.__class__.__name__})
        if len(own.data_vars)==0:
            raise ValueError(f'File [{filename}] holds no data stored by {self.__class__.__name__}')
        self.ds_results = own

    #----------------------------------------------------------------
    #%% Config
    #----------------------------------------------------------------
    def set_custom_config(self,custom_config=None):
        """
        Copy custom key/value pairs into self.config

        A 'verbosity' entry also sets the log level.
        """
        for key,value in (custom_config or {}).items():
            self.config[key] = value

        if 'verbosity' in self.config:
            self.log.verbosity = self.config.verbosity

#================================================================
#%% Trial sequence class
#================================================================
class AbstractTrialSequence(abc.ABC,CommonUtility):
    """
    Runs measurements over every combination of setup conditions

    Subclasses fill
        * self.conditions : in define_setup_conditions()
        * self.meas : in define_measurements()

    and may put run descriptions into self.information, which end up as
    attributes of ds_results.
    """
    name = ''

    def __init__(self,resources={},**kwargs) -> None:
        """
        Parameters
        ----------
        resources : dict, optional
            objects the measurements work on, e.g. the point set and the plan
        config : dict, optional
            settings copied into every measurement and condition
        """
        self.resources = resources

        self.config = ObjDict()
        self.conditions = ObjDict()
        self.meas = ObjDict()
        self.information = ObjDict()
        self.ds_results = None

        self.log = debugPrintout(self)
        self.last_error = ''

        self._running_order = []
        self.df_conditions = pd.DataFrame()

        self.set_custom_config(kwargs.get('config',{}))

        self.add_measurement(Timestamp)
        self.define_setup_conditions()
        self.define_measurements()

        self.initialise()

        if self.name=='':
            self.name = self.__class__.__name__


    def __repr__(self):
        return f'TrialSequence[{self.name}]'

    #----------------------------------------------------------------
    #%% Running
    #----------------------------------------------------------------
    @timed_run
    def run(self,conditions=None):
        """
        Run the sequence over all or the given conditions

        Parameters
        ----------
        conditions : list of dict, optional
            e.g. [{'seed':3},{'seed':9}], by default the conditions table

        Returns
        -------
        bool
            True if every step ran, otherwise see last_error
        """
        self.clear_all_results()
        self.make_running_order(conditions)

        if not self._running_order:
            self.log('Nothing to run')
            return True

        self.last_error = ''
        try:
            self.pre_process()

            for line in self._running_order:
                if line.operation==OP_COND:
                    self.conditions[line.label].setpoint = line.arguments
                    continue

                meas = self.meas[line.label]
                if not meas.run(conditions=line.arguments):
                    raise RuntimeError(f'Measurement [{line.label}] failed at conditions {line.arguments}\n{meas.last_error}')

            self.post_process()

        except Exception:
            self.last_error = traceback.format_exc()
            self.log(f'{self} stopped with an error','brief')
            self.log(self.last_error,'brief')

        finally:
            # partial results are kept after an error
            self.get_results()

        return self.last_error==''


    def make_running_order(self,conditions=None):
        """
        Build the list of steps run() executes

        Startup measurements come first. Then, for each row of the
        conditions, every changed condition is set and the main stage
        measurements run.
        """
        table = self.conditions_table if conditions is None else conditions

        if not isinstance(table,list):
            raise ValueError('Conditions must be a list of dicts, e.g. [{"seed":3}]')

        self.df_conditions = pd.DataFrame(table)
        self._running_order = []

        self._add_stage(self.RUN_STAGE_STARTUP,{})

        previous = {}
        for row in table:
            for label,cond in self.conditions.items():
                if cond.name in row and row[cond.name]!=previous.get(cond.name):
                    self._add_step(OP_COND,label,row[cond.name])

            self._add_stage(self.RUN_STAGE_MAIN,row)
            previous = row

        self.log(f'Running order has {len(self._running_order)} steps')


    def _add_stage(self,stage,conditions):
        for label,meas in self.meas.items():
            if meas.enable and stage in meas.run_conditions:
                self._add_step(OP_MEAS,label,conditions)


    def _add_step(self,operation,label,arguments):
        if operation==OP_COND:
            assert np.ndim(arguments)==0, f'Condition [{label}] setpoint must be a single value not [{arguments}]'
        else:
            assert hasattr(arguments,'keys'), f'Measurement [{label}] needs a dict of conditions not [{arguments}]'

        self._running_order.append(ObjDict(operation=operation,
                                           label=label,
                                           arguments=copy.deepcopy(arguments)))

    @property
    def df_running_order(self):
        """
        The running order as a DataFrame

        columns Operation, Label and one per condition
        """
        self.make_running_order()

        rows = []
        for line in self._running_order:
            row = {'Operation':line.operation,'Label':line.label}
            row.update({k:None for k in self.conditions})

            if line.operation==OP_COND:
                row[line.label] = line.arguments
            else:
                row.update({k:v for k,v in line.arguments.items() if k in self.conditions})
            rows.append(row)

        return pd.DataFrame(rows)

    #----------------------------------------------------------------
    #%% Conditions and measurements
    #----------------------------------------------------------------
    @property
    def conditions_table(self):
        """
        Every combination of the enabled condition values as a list of dicts

        The first condition varies the slowest.

        >>> seq.conditions_table
        [{'seed': 0}, {'seed': 1}, {'seed': 2}]
        """
        enabled = [c for c in self.conditions.values() if c.enable]
        names = [c.name for c in enabled]
        return [dict(zip(names,combo)) for combo in itertools.product(*[c.values for c in enabled])]


    def add_setup_condition(self,cond_class,cond_name=''):
        """
        Create a condition from its class and add it to self.conditions

        cond_name is also the coordinate name in ds_results, the class
        name by default
        """
        cond_name = cond_name or cond_class.name or cond_class.__name__

        self.conditions[cond_name] = cond_class(self.resources,config=self.config)
        self.conditions[cond_name].name = cond_name


    def add_measurement(self,meas_class,meas_name=''):
        """
        Create a measurement from its class and add it to self.meas
        """
        meas_name = meas_name or meas_class.name or meas_class.__name__
        self.meas[meas_name] = meas_class(self.resources,config=self.config)

    #----------------------------------------------------------------
    #%% Results
    #----------------------------------------------------------------
    def clear_all_results(self):
        for obj in list(self.meas.values()) + list(self.conditions.values()):
            obj.clear_results()


    def get_results(self):
        """
        Merge the measurement datasets into self.ds_results

        Information items become dataset attributes and the default
        coordinate of condition-free measurements is dropped.
        """
        datasets = [m.ds_results for m in self.meas.values() if m.enable and m.ds_results is not None]

        self.ds_results = xr.merge(datasets,combine_attrs='drop_conflicts') if datasets else xr.Dataset()
        self.ds_results.attrs.update(self.information)

        if DEFAULT_COORD in self.ds_results.dims:
            self.ds_results = self.ds_results.drop_dims(DEFAULT_COORD)

    #----------------------------------------------------------------
    #%% Config
    #----------------------------------------------------------------
    def _config_owners(self):
        return [self] + list(self.conditions.values()) + list(self.meas.values())

    def config_replace(self,label,data):
        """
        Change a config value wherever it already exists

        >>> seq.config_replace('n_scale',0.25)
        """
        for obj in self._config_owners():
            if label in obj.config:
                obj.config[label] = data


    def config_set(self,label,data):
        """
        Set a config value in the sequence, every condition and every measurement
        """
        for obj in self._config_owners():
            obj.config[label] = data

    #----------------------------------------------------------------
    #%% Definitions
    #----------------------------------------------------------------
    @abc.abstractmethod
    def define_setup_conditions(self):
        """
        Fill self.conditions

        def define_setup_conditions(self):
            self.add_setup_condition(SeedCondition,'seed')
        """
        pass

    @abc.abstractmethod
    def define_measurements(self):
        """
        Fill self.meas

        def define_measurements(self):
            self.add_measurement(CascadeTrial)
        """
        pass

    def pre_process(self):
        """Run before the first step"""
        pass

    def post_process(self):
        """Run after the last step"""
        pass

    def initialise(self):
        pass

#================================================================
#%% Measurement class
#================================================================
class AbstractMeasurement(abc.ABC,CommonUtility):
    """
    One measurement of a trial sequence

    Subclasses define meas_sequence() and store results with
    store_data_var(), indexed by the conditions the measurement ran at.

    >>> meas = CascadeTrial(resources,config=config)
    >>> meas.run(dict(seed=3))
    True
    >>> meas.ds_results
    """
    name = ''

    def __init__(self,resources={},**kwargs):
        """
        Parameters
        ----------
        resources : dict like
            e.g. {'points':points, 'plan':plan}
        config : dict, optional
        """
        self.enable = True
        self.resources = resources

        # Stages this measurement runs at
        self.run_conditions = {}
        self.run_on_main(True)

        self.ds_results = None
        self.current_conditions = {}

        self.config = ObjDict()
        self.log = debugPrintout(self)
        self.last_error = ''

        self.set_custom_config(kwargs.get('config',{}))

        self.initialise()

        if self.name=='':
            self.name = self.__class__.__name__


    def __repr__(self):
        return f'Measurement[{self.name}]'


    def initialise(self):
        """
        Called once on creation, e.g. to fetch resources

            self.points = self.get_resource('points')
        """
        pass

    @timed_run
    def run(self,conditions=None,**kwargs):
        """
        Run meas_sequence() at the given conditions

        The measurement does not set the conditions, they only index its
        results. With no conditions the results get a 'default' coordinate.
        Errors are caught and reported in self.last_error.

        Parameters
        ----------
        conditions : dict, optional
            e.g. dict(seed=3)
        **kwargs :
            passed to meas_sequence()

        Returns
        -------
        bool
            True if meas_sequence() finished without error
        """
        if not self.enable:
            return True

        conditions = dict(conditions) if conditions else {DEFAULT_COORD:0}

        self.set_conditions(conditions)
        self.current_conditions = conditions

        self.last_error = ''
        try:
            self.meas_sequence(**kwargs)
        except Exception:
            self.last_error = traceback.format_exc()
            self.log(f'{self} failed at {conditions}','brief')
            self.log(self.last_error,'brief')
            return False

        return True


    @abc.abstractmethod
    def meas_sequence(self):
        raise NotImplementedError(f'{self.__class__.__name__} has no meas_sequence()')


    @property
    def current_results(self):
        """ds_results at the current conditions"""
        if not self.current_conditions:
            return self.ds_results

        return self.ds_results.sel(self.current_conditions)

    #----------------------------------------------------------------
    #%% Run stages
    #----------------------------------------------------------------
    def run_on_startup(self,enable):
        """
        Run once before any condition is set, instead of at every condition
        """
        if enable:
            self.run_conditions[self.RUN_STAGE_STARTUP] = {}
            self.run_on_main(False)
        else:
            self.run_conditions.pop(self.RUN_STAGE_STARTUP,None)


    def run_on_main(self,enable):
        """Run at every row of the conditions table"""
        if enable:
            self.run_conditions[self.RUN_STAGE_MAIN] = {}
        else:
            self.run_conditions.pop(self.RUN_STAGE_MAIN,None)

#================================================================
#%% Setup conditions class
#================================================================
class AbstractSetupConditions(abc.ABC,CommonUtility):
    """
    A condition held fixed while the measurements run, e.g. the master
    seed of one trial

    Subclasses give the setpoint property (with setter) and the read only
    actual property. self.values lists the setpoints the sequence steps
    through.
    """
    name = ''

    def __init__(self,resources,**kwargs):
        self.enable = True
        self.resources = resources
        self.values = kwargs.get('values',[])

        self.config = ObjDict()
        self.ds_results = None
        self.log = debugPrintout(self)

        self.initialise()

        self.set_custom_config(kwargs.get('config',{}))

        if self.name=='':
            self.name = self.__class__.__name__


    def __repr__(self):
        return f'SetupCondition[{self.name}]'


    def initialise(self):
        pass

    @property
    @abc.abstractmethod
    def setpoint(self):
        raise NotImplementedError(f'{self.__class__.__name__} has no setpoint')

    @setpoint.setter
    @abc.abstractmethod
    def setpoint(self,value):
        raise NotImplementedError(f'{self.__class__.__name__} has no setpoint')

    @property
    @abc.abstractmethod
    def actual(self):
        raise NotImplementedError(f'{self.__class__.__name__} has no actual value')

#================================================================
#%% Timestamp measurement
#================================================================
class Timestamp(AbstractMeasurement):
    """
    Adds the start time of the sequence as a 'timestamp' coordinate
    """
    def initialise(self):
        self.run_on_startup(True)
        self.config.timestamp_format = '%Y-%m-%d %Hh%Mm%S'

    def meas_sequence(self):
        now = datetime.datetime.now()
        self.store_coords('timestamp',[now.strftime(self.config.timestamp_format)])
