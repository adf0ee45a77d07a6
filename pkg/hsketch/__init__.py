"""
hsketch main package
================================================================
Import all the hsketch modules here so that they are available from
one import

>>> import hsketch
>>> points = hsketch.gen_sphere(10,16,1.0,seed=3)

"""
from .hsk_support import *
from .hsk_iterates import *
from .hsk_signsketch import *
from .hsk_gaussian import *
from .hsk_pointset import *
from .hsk_planner import *
from .hsk_cascade import *
from .hsk_recovery import *
from .hsk_jl_baseline import *
from .hsk_storage import *
from .hsk_core import *
from .hsk_harness import *
