'''
Cascade planner
================================================================
Works out every parameter of a sketch from the point set and the target
accuracy epsilon:

* m    : minimum distance between normalised points
* r    : max over pairs of 2/sqrt(1-|<x,y>|)
* rho  : minimum squared norm (1 in sphere mode)
* ell  : number of sign layers, max(1, ceil(log2 log2 (4/m)))
* delta: per level error target (eps'/sqrt2)(sqrt2/pi)^ell
* dims : D_1 .. D_ell, with N = D_ell the sketch length
* norm_step : ball mode norm quantiser step rho m^2 eps/48
* bit_budget: n N, plus n ceil(log2(1/norm_step)) in ball mode

The working accuracy eps' is eps/4 on the sphere and eps/32 in the ball
for the multiplicative guarantee, and eps itself for the additive plan
variant.

Example
-------
>>> ps = PointSet(np.eye(2),'sphere')
>>> plan = make_plan(ps,0.3,master_seed=7)
>>> plan.ell, plan.m
(1, 1.4142135623730951)

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import math
import dataclasses
import collections

# Third party libraries
import numpy as np

# Local libraries
from .hsk_support import (ObjDict,merge_config,module_log,config_verbosity,
                          PreconditionError,DegenerateInputError)
from .hsk_pointset import PointSet,MODE_SPHERE,MODE_BALL,check_mode
from .hsk_gaussian import check_seed

#================================================================
#%% Constants
#================================================================
TARGET_MULTIPLICATIVE = 'multiplicative'
TARGET_ADDITIVE = 'additive'
TARGETS = (TARGET_MULTIPLICATIVE,TARGET_ADDITIVE)

# Working accuracy divisors for the multiplicative guarantee
SPHERE_EPS_DIVISOR = 4
BALL_EPS_DIVISOR = 32

# Ball norm step is rho m^2 eps / NORM_STEP_DIVISOR
NORM_STEP_DIVISOR = 48

# Norm indices are stored as u32
MAX_NORM_INDEX = 2**32 - 1

# Relative slack when comparing a supplied plan with measured values
MEASURE_RTOL = 1e-12

PointSetMeasure = collections.namedtuple('PointSetMeasure',
        ['m','r','rho','min_gap','min_gap_pair','min_dist_pair'])

log = module_log('planner')

#================================================================
#%% Classes
#================================================================
@dataclasses.dataclass(frozen=True)
class CascadePlan:
    """
    Every derived parameter of a cascade sketch

    Plans read back from a sketch file only carry the header fields;
    delta, working_epsilon, n_constant and target are then None.
    """
    n: int
    d: int
    mode: str
    epsilon: float
    m: float
    r: float
    rho: float
    ell: int
    dims: tuple
    master_seed: int
    norm_step: float = None
    delta: float = None
    working_epsilon: float = None
    n_constant: float = None
    target: str = None

    def __post_init__(self):
        object.__setattr__(self,'dims',tuple(int(D) for D in self.dims))
        check_mode(self.mode)
        check_seed(self.master_seed)

        assert self.ell>=1, f'Plan must have at least one level not [{self.ell}]'
        assert len(self.dims)==self.ell, f'Plan needs {self.ell} dimensions not {self.dims}'
        assert all(D>0 for D in self.dims), f'Plan dimensions must be positive {self.dims}'

        if self.mode==MODE_SPHERE:
            assert self.norm_step is None, 'Sphere plans carry no norm step'
        else:
            assert self.norm_step is not None and 0<self.norm_step<1, f'Ball plans need a norm step in (0,1) not [{self.norm_step}]'
            assert 1/self.norm_step <= MAX_NORM_INDEX, f'Norm step [{self.norm_step}] too fine for u32 indices'

    @property
    def N(self):
        """Final sketch length D_ell"""
        return self.dims[-1]

    @property
    def norm_bits(self):
        """Bits per stored norm, 0 in sphere mode"""
        if self.mode==MODE_SPHERE:
            return 0
        return math.ceil(math.log2(1/self.norm_step))

    @property
    def bit_budget(self):
        return bit_budget(self)

    @property
    def target_rate(self):
        """Success probability the guarantee promises, (1-2/n)^ell"""
        return (1 - 2/self.n)**self.ell

    def level_bound(self,j):
        """
        Allowed deviation of level j inner products from f_j,

            delta / (2^(ell-j) r^(3((2/3)^j - (2/3)^ell)))
        """
        assert self.delta is not None, 'Plan has no delta recorded'
        assert 1<=j<=self.ell, f'Level must be in 1..{self.ell} not [{j}]'
        exponent = 3*((2/3)**j - (2/3)**self.ell)
        return self.delta/(2**(self.ell - j)*self.r**exponent)

    def additive_bound(self,sq_dist):
        """
        Additive error bound eps' |x-y|^(2-2^(-ell+1)) on recovered squared distances
        """
        assert self.working_epsilon is not None, 'Plan has no working epsilon recorded'
        dist = np.sqrt(np.asarray(sq_dist,dtype=np.float64))
        return self.working_epsilon*dist**(2 - 2.0**(1 - self.ell))

#================================================================
#%% Functions
#================================================================
def levels_for_min_distance(m):
    """
    Number of layers ell = max(1, ceil(log2 log2 (4/m)))

    >>> levels_for_min_distance(0.25)
    2
    >>> levels_for_min_distance(2**0.5)
    1
    """
    if not m>0:
        raise ValueError(f'Minimum distance must be positive not [{m}]')
    inner = math.log2(4/m)
    if inner<=1:
        return 1
    return max(1,math.ceil(math.log2(inner)))


def working_epsilon(epsilon,mode,target=TARGET_MULTIPLICATIVE):
    """
    Accuracy the cascade itself has to reach
    """
    if target==TARGET_ADDITIVE:
        return epsilon
    if target!=TARGET_MULTIPLICATIVE:
        raise ValueError(f'Plan target must be one of {TARGETS} not [{target}]')
    if mode==MODE_SPHERE:
        return epsilon/SPHERE_EPS_DIVISOR
    return epsilon/BALL_EPS_DIVISOR


def dimension_schedule(n,r,ell,delta,n_constant=48.0):
    """
    D_j = ceil((n_constant/2) 4^(ell-j) r^(6((2/3)^j-(2/3)^ell)) ln n / delta^2)

    Parameters
    ----------
    n : int
        number of points
    r : float
        max 2/sqrt(1-|<x,y>|), >= 2
    ell : int
        number of levels
    delta : float
        per level error target
    n_constant : float, optional
        multiplier of the final dimension, by default 48

    Returns
    -------
    tuple of int
        D_1 .. D_ell
    """
    level_constant = n_constant/2
    log_n = math.log(n)
    dims = []
    for j in range(1,ell+1):
        growth = r**(6*((2/3)**j - (2/3)**ell))
        dims.append(math.ceil(level_constant*4**(ell - j)*growth*log_n/delta**2))
    return tuple(dims)


def schedule(n,m,r,epsilon,mode=MODE_SPHERE,rho=1.0,n_constant=48.0,target=TARGET_MULTIPLICATIVE):
    """
    Plan parameters from (n, m, r, rho, eps) without a point set

    Returns
    -------
    ObjDict
        ell, working_epsilon, delta, dims, norm_step
    """
    check_mode(mode)
    if not 0<epsilon<1:
        raise ValueError(f'Epsilon must be in (0,1) not [{epsilon}]')
    if n<2:
        raise ValueError(f'Need at least 2 points not [{n}]')

    ell = levels_for_min_distance(m)
    eps_work = working_epsilon(epsilon,mode,target)
    delta = (eps_work/math.sqrt(2))*(math.sqrt(2)/math.pi)**ell

    assert delta < 2/r**2, f'Level error target [{delta}] must be below 2/r^2 [{2/r**2}]'

    norm_step = None
    if mode==MODE_BALL:
        norm_step = rho*m**2*epsilon/NORM_STEP_DIVISOR

    return ObjDict(ell=ell,
                   working_epsilon=eps_work,
                   delta=delta,
                   dims=dimension_schedule(n,r,ell,delta,n_constant),
                   norm_step=norm_step)


def measure_detail(points):
    """
    Brute force pass over all pairs of normalised points

    1-|<x,y>| is evaluated as min(|x-y|^2, |x+y|^2)/2 which keeps full
    relative accuracy for close and near antipodal pairs.

    Parameters
    ----------
    points : PointSet

    Returns
    -------
    PointSetMeasure
        m, r, rho, the smallest 1-|<x,y>| and the pairs achieving the
        minima

    Raises
    ------
    PreconditionError
        fewer than 2 points
    DegenerateInputError
        coincident or antipodal normalised points
    """
    if points.n<2:
        raise PreconditionError(f'Need at least 2 points to plan not [{points.n}]')

    X = points.normalized()
    n = points.n

    min_dist = np.inf
    min_dist_pair = None
    min_gap = np.inf
    min_gap_pair = None

    for i in range(n - 1):
        minus = X[i+1:] - X[i]
        plus = X[i+1:] + X[i]
        sq_minus = np.einsum('ij,ij->i',minus,minus)
        sq_plus = np.einsum('ij,ij->i',plus,plus)

        k = int(np.argmin(sq_minus))
        if sq_minus[k] < min_dist:
            min_dist = float(sq_minus[k])
            min_dist_pair = (i,i+1+k)

        gaps = np.minimum(sq_minus,sq_plus)/2
        k = int(np.argmin(gaps))
        if gaps[k] < min_gap:
            min_gap = float(gaps[k])
            min_gap_pair = (i,i+1+k)

    if min_dist==0:
        raise DegenerateInputError(f'Points {min_dist_pair[0]} and {min_dist_pair[1]} coincide after normalisation')
    if min_gap==0:
        raise DegenerateInputError(f'Points {min_gap_pair[0]} and {min_gap_pair[1]} are antipodal after normalisation')

    m = math.sqrt(min_dist)
    r = 2/math.sqrt(min_gap)
    rho = 1.0 if points.mode==MODE_SPHERE else float(np.min(points.norms)**2)

    return PointSetMeasure(m,r,rho,min_gap,min_gap_pair,min_dist_pair)


def measure(points):
    """
    Return (m, r, rho) of a point set

    Example
    -------
    >>> measure(PointSet(np.eye(2),'sphere'))
    (1.4142135623730951, 2.0, 1.0)
    """
    detail = measure_detail(points)
    return detail.m,detail.r,detail.rho


def check_epsilon(epsilon,detail):
    """
    The hypothesis eps < min over pairs of 1-|<x,y>|

    Raises
    ------
    PreconditionError
        naming the pair with the smallest gap
    """
    if not 0<epsilon<1:
        raise PreconditionError(f'Epsilon must be in (0,1) not [{epsilon}]')
    if not epsilon < detail.min_gap:
        i,j = detail.min_gap_pair
        raise PreconditionError(f'Epsilon [{epsilon}] must be below 1-|<x,y>| = [{detail.min_gap:.6g}] for pair ({i}, {j})')


@config_verbosity
def make_plan(points,epsilon,master_seed,config=None):
    """
    Plan a cascade sketch for a point set

    Parameters
    ----------
    points : PointSet
    epsilon : float
        target accuracy in (0,1)
    master_seed : int
        64 bit seed for the Gaussian rows
    config : dict like, optional
        n_constant and target are read from it

    Returns
    -------
    CascadePlan

    Raises
    ------
    PreconditionError
        if epsilon breaks the hypothesis, naming the offending pair
    DegenerateInputError
        coincident or antipodal points
    """
    config = merge_config(config)
    master_seed = check_seed(master_seed)

    detail = measure_detail(points)
    check_epsilon(epsilon,detail)

    params = schedule(points.n,detail.m,detail.r,epsilon,
                      mode=points.mode,rho=detail.rho,
                      n_constant=float(config.n_constant),target=config.target)

    plan = CascadePlan(n=points.n,d=points.d,mode=points.mode,epsilon=float(epsilon),
                       m=detail.m,r=detail.r,rho=detail.rho,ell=params.ell,dims=params.dims,
                       master_seed=master_seed,norm_step=params.norm_step,delta=params.delta,
                       working_epsilon=params.working_epsilon,
                       n_constant=float(config.n_constant),target=config.target)

    log(f'Planned {plan.ell} level(s), N = {plan.N}, bit budget = {plan.bit_budget}','brief')
    log(f'dims = {plan.dims}')
    return plan


def bit_budget(plan):
    """
    Total sketch bits: n N in sphere mode, n N + n ceil(log2(1/norm_step)) in ball mode

    >>> plan = CascadePlan(n=10,d=2,mode='ball',epsilon=0.1,m=1.0,r=2.0,rho=1.0,
    ...                    ell=1,dims=(64,),master_seed=0,norm_step=2**-10)
    >>> bit_budget(plan)
    740
    """
    return plan.n*plan.N + plan.n*plan.norm_bits


def scale_final_dimension(plan,factor):
    """
    Copy of a plan with N replaced by ceil(factor N)

    Used by undersized ablations; the earlier levels are unchanged.
    """
    if not factor>0:
        raise ValueError(f'Scale factor must be positive not [{factor}]')
    dims = plan.dims[:-1] + (max(1,math.ceil(plan.N*factor)),)
    return dataclasses.replace(plan,dims=dims)


def with_seed(plan,master_seed):
    """Copy of a plan with another master seed"""
    return dataclasses.replace(plan,master_seed=check_seed(master_seed))


def check_plan_compatible(plan,points):
    """
    Check a supplied plan against the measured point set

    Raises
    ------
    PreconditionError
        if n, d or mode differ, if the measured (m, r, rho) differ from the
        plan's, or if epsilon breaks the hypothesis on the measured gaps
    """
    if (plan.n,plan.d,plan.mode)!=(points.n,points.d,points.mode):
        raise PreconditionError(f'Plan is for (n={plan.n}, d={plan.d}, {plan.mode}) not '
                                f'(n={points.n}, d={points.d}, {points.mode})')

    detail = measure_detail(points)
    for name in ('m','r','rho'):
        planned = getattr(plan,name)
        measured = getattr(detail,name)
        if not math.isclose(planned,measured,rel_tol=MEASURE_RTOL):
            raise PreconditionError(f'Plan {name} = [{planned!r}] does not match measured [{measured!r}]')

    check_epsilon(plan.epsilon,detail)
    return detail


def asymptotic_bits(n,m,epsilon):
    """
    Leading order bit count n ln n / eps^2 (log2 (4/m))^(2 log2(pi/sqrt2))
    """
    exponent = 2*math.log2(math.pi/math.sqrt(2))
    return n*math.log(n)/epsilon**2*math.log2(4/m)**exponent
