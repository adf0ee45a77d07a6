#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Support classes
=================

Small helpers shared by every hsketch module:

* ObjDict : dict with attribute access, used for config and information
* debugPrintout : verbosity-controlled logging printout, with module logs
  that config_verbosity quiets per call
* TablePrinter : ASCII tables for plan and trial summaries
* Error classes, each carrying the CLI exit code it maps to
* default_config() : the package wide configuration settings

"""

#=============================================================================
#%% Imports
#=============================================================================

import sys
import functools
import inspect
from collections import OrderedDict

#============================================================================
#%% Constants
#============================================================================

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PRECONDITION = 2
EXIT_INTEGRITY = 3
EXIT_VERIFICATION = 4

#============================================================================
#%% Functions
#============================================================================

def pad_to_length(string,width,truncate=True,pad_char=' '):
    """
    Centre a string in a field of `width` characters

    Longer strings are cut, or raise RuntimeError if truncate is False.
    An odd amount of padding puts the extra character on the left.
    """
    assert len(pad_char)==1, 'Padding character must be length 1'

    if len(string)>width:
        if not truncate:
            raise RuntimeError(f'[{string}] does not fit in {width} characters')
        string = string[:width]

    diff = width - len(string)
    return pad_char*(diff - diff//2) + string + pad_char*(diff//2)


def default_config(**overrides):
    """
    Package wide configuration settings

    Every planner, cascade and harness call takes an optional config
    ObjDict. Missing keys fall back to the values here.

    Parameters
    ----------
    **overrides :
        key/value pairs replacing the defaults

    Returns
    -------
    ObjDict
        configuration

    Examples
    --------
    >>> config = default_config(n_constant=12.0)
    >>> config.n_constant
    12.0
    """
    config = ObjDict(
        n_constant = 48.0,              # N = ceil(n_constant (pi/sqrt2)^(2 ell) ln n / eps'^2)
        target = 'multiplicative',      # or 'additive'
        workers = 1,                    # threads for row-block projection
        point_batch = 256,              # points pushed through the cascade at once
        retry_budget = 2000,            # consecutive rejections before a generator gives up
        confidence = 0.95,              # one-sided binomial confidence
        rate_slack = 0.05,              # acceptance slack below target success rate
        band_sigmas = 4.0,              # standard error band for mean tests
        engine = 'exact',               # 'exact' sketches or 'gram' simulation
        n_scale = 1.0,                  # final dimension multiplier (0.25 for ablation)
        coord_range = 2.0,              # JL clamp bound B
        check_levels = True,            # record level-wise errors in trials
        include_jl = False,             # run the JL baseline in the trial sequence
        verbosity = 'brief',
        )

    for key,value in overrides.items():
        if key not in config:
            raise ValueError(f'Unknown config setting [{key}]')
        config[key] = value

    return config


def merge_config(config=None,**overrides):
    """
    Fill in a partial config with the defaults

    Parameters
    ----------
    config : dict like, optional
        user supplied settings, by default None

    Returns
    -------
    ObjDict
        complete configuration
    """
    merged = default_config()
    if config:
        for key,value in config.items():
            merged[key] = value
    for key,value in overrides.items():
        merged[key] = value
    return merged

_MODULE_LOGS = {}

def module_log(name,level='brief'):
    """
    Shared debugPrintout for a module, created on first use

    >>> log = module_log('planner')
    >>> log('Levels = 2','brief')
    """
    if name not in _MODULE_LOGS:
        _MODULE_LOGS[name] = debugPrintout(name,level=level)
    return _MODULE_LOGS[name]


def set_module_verbosity(level):
    """Set the verbosity of every module log"""
    for log in _MODULE_LOGS.values():
        log.verbosity = level


def config_verbosity(func):
    """
    Run func with the module logs at the verbosity of its config argument

    The previous levels come back when func returns. Calls without a
    config, or with one that has no verbosity, leave the logs alone.

    >>> @config_verbosity
    ... def make_plan(points,epsilon,master_seed,config=None):
    """
    signature = inspect.signature(func)

    @functools.wraps(func)
    def wrapper(*args,**kwargs):
        config = signature.bind_partial(*args,**kwargs).arguments.get('config')
        if not config or 'verbosity' not in config:
            return func(*args,**kwargs)

        previous = {name:log.verbosity for name,log in _MODULE_LOGS.items()}
        set_module_verbosity(config['verbosity'])
        try:
            return func(*args,**kwargs)
        finally:
            for name,level in previous.items():
                _MODULE_LOGS[name].verbosity = level

    return wrapper

#=============================================================================
#%% Error classes
#=============================================================================

class SketchError(Exception):
    """Base class for hsketch errors"""
    exit_code = EXIT_USAGE


class PreconditionError(SketchError,ValueError):
    """Input violates the hypotheses a plan or sketch relies on"""
    exit_code = EXIT_PRECONDITION


class DegenerateInputError(PreconditionError):
    """Coincident, antipodal or zero points"""


class DomainError(SketchError,ValueError):
    """Argument outside [-1,1] beyond rounding tolerance"""
    exit_code = EXIT_PRECONDITION


class DimensionMismatchError(SketchError,ValueError):
    """Sketch lengths or vector dimensions do not agree"""
    exit_code = EXIT_USAGE


class InfeasiblePackingError(SketchError,RuntimeError):
    """Point generator could not meet its separation target"""
    exit_code = EXIT_PRECONDITION


class IntegrityError(SketchError,RuntimeError):
    """Sketch or point file failed a consistency check"""
    exit_code = EXIT_INTEGRITY


class VerificationError(SketchError,RuntimeError):
    """Acceptance checks on trial results failed"""
    exit_code = EXIT_VERIFICATION

#=============================================================================
#%% Classes
#=============================================================================

class ObjDict(OrderedDict):
    """
    Dict whose keys can also be read and written as attributes

    >>> config = ObjDict(epsilon=0.2)
    >>> config.n_constant = 8
    >>> config['n_constant']
    8
    """

    def __init__(self,**kwargs):
        super().__init__()
        self.update(kwargs)

    def __dir__(self):
        return [str(k) for k in self.keys()] + super().__dir__()

    def __getattr__(self, name):
        # abc inspects class attributes for this flag
        if name=='__isabstractmethod__':
            return False
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name) from None

    def __setattr__(self, name, value):
        self[name] = value

    def __delattr__(self, name):
        try:
            del self[name]
        except KeyError:
            raise AttributeError(name) from None

    def __reduce__(self):
        return (self.__class__, (), None, None, iter(self.items()))

    def copy(self):
        return self.__class__(**self)


class debugPrintout:
    """
    Printout of progress messages, filtered by verbosity

    Levels are 'none', 'brief' and 'verbose'. At 'brief' only messages
    sent at 'brief' are shown, at 'verbose' everything is. Messages go to
    standard error so tables and CSV on standard output stay clean.

    >>> log = debugPrintout('planner',level='brief')
    >>> log('Planning 3 levels','brief')
    > planner                   | Planning 3 levels
    """

    dbg_levels = ['none','brief','verbose']

    def __init__(self,owner=None,level='verbose',stream=None):
        self.verbosity = level
        self.owner = owner
        self.stream = stream

    def __repr__(self):
        return f'debugPrintout(level={self.verbosity_level})'

    def __call__(self,message,message_verbosity='verbose'):
        if self.verbosity_level=='none':
            return
        if self.verbosity_level=='brief' and message_verbosity.lower()!='brief':
            return

        if isinstance(self.owner,str):
            prefix,caller = '>',self.owner
        else:
            prefix,caller = '@',self.owner.__class__.__name__

        print(f'{prefix} {caller:25} | {message}',file=self.stream or sys.stderr)

    @property
    def verbosity(self):
        return self.verbosity_level

    @verbosity.setter
    def verbosity(self,level):
        assert level in self.dbg_levels, f'Unknown verbosity level [{level}], use one of {self.dbg_levels}'
        self.verbosity_level = level

# -----------------------------------------------------------------------------
class TablePrinter():
    """
    ASCII table, printed row by row or dumped at the end

    >>> table = TablePrinter(['seed','pairs ok','max rel err'],formats=['%i','%s','%.4f'])
    >>> table.addrow([7,True,0.0123],print_row=False)
    >>> print(table.dump_string())

    Values added are kept per column in table.contents
    """

    max_width_char = 160
    min_column_width = 12

    def __init__(self,columns,units=None,formats=None,column_widths=None,stream=None):
        """
        Parameters
        -----------
        columns : list of str
        units : list of str, optional
            printed as a second header line
        formats : list of str, optional
            %-style format per column, '%s' by default
        column_widths : list of int, optional
            by default the wider of the name and min_column_width
        stream : file like, optional
            where header() and addrow() print, standard output by default
        """
        self.columns = list(columns)
        self.units = units
        self.formats = list(formats) if formats else ['%s']*len(self.columns)
        self.stream = stream

        for label,values in [('Units',units),('Formats',formats),('Column widths',column_widths)]:
            if values:
                assert len(values)==len(self.columns), f'{label} need one entry per column [{len(self.columns)}]'

        if column_widths:
            self.column_widths = list(column_widths)
        else:
            labels = zip(self.columns,units or ['']*len(self.columns))
            self.column_widths = [max(len(name),len(unit),self.min_column_width) for name,unit in labels]
        assert sum(self.column_widths)<self.max_width_char, f'Table is wider than {self.max_width_char} characters'

        self.contents = {name:[] for name in self.columns}
        self.rows = []

        self._header = [self.separator('-'),self._line(self.columns)]
        if units:
            self._header.append(self._line(units))
        self._header.append(self.separator('='))


    def __repr__(self):
        return f'TablePrinter({len(self.columns)} columns)'

    def _line(self,cells):
        return '|' + '|'.join(pad_to_length(c,w) for c,w in zip(cells,self.column_widths)) + '|'

    def separator(self,line_char='-'):
        return '+' + '+'.join(line_char*w for w in self.column_widths) + '+'

    def header(self):
        print('\n'.join(self._header),file=self.stream)


    def addrow(self,row_list,print_row=True):
        """
        Add a row, printing it unless print_row is False
        """
        assert len(row_list)==len(self.columns), f'Row needs {len(self.columns)} values, got {len(row_list)}'

        new_rows = [self._line([f % v for f,v in zip(self.formats,row_list)]),self.separator('-')]
        self.rows.extend(new_rows)

        if print_row:
            print('\n'.join(new_rows),file=self.stream)

        for name,value in zip(self.columns,row_list):
            self.contents[name].append(value)


    def printout(self):
        print(self.dump_string(),file=self.stream)

    def dump_string(self):
        return '\n'.join(self._header + self.rows)
