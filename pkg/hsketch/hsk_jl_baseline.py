'''
Johnson-Lindenstrauss baseline
================================================================
The comparison sketch: a Gaussian random projection to k dimensions
followed by rounding every coordinate to a uniform grid.

* k = ceil(12 ln n / ((eps/2)^2 - (eps/2)^3)) keeps every pairwise
  squared distance within (1 +- eps/2) with probability >= 1 - 2/n
* the grid step s = m^2 (eps/2) / (3 sqrt k) moves each point by at most
  s sqrt(k)/2, which costs at most an additive m^2 eps/2 on any squared
  distance, i.e. (1 +- eps/2) on pairs at distance >= m
* coordinates are clamped to [-B, B], B = coord_range (2 by default),
  and each one is stored in ceil(log2(2B/s + 1)) bits

The projection uses Gaussian stream JL_STREAM of the master seed so the
matrix never collides with a cascade layer.

Example
-------
>>> jl_dimension(100,0.2)
6141

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import math
import dataclasses

# Third party libraries
import numpy as np
from scipy.spatial import distance

# Local libraries
from .hsk_support import module_log,PreconditionError
from .hsk_gaussian import JL_STREAM,gaussian_rows,check_seed
from .hsk_pointset import PointSet

#================================================================
#%% Constants
#================================================================
DEFAULT_COORD_RANGE = 2.0

log = module_log('jl_baseline')

#================================================================
#%% Classes
#================================================================
@dataclasses.dataclass(frozen=True)
class JlSketch:
    """
    Quantised projection of a point set

    codes[i] * step is the decoded projection of point i.
    """
    k: int
    step: float
    coord_range: float
    codes: np.ndarray
    bits: int
    clamp_count: int = 0

    @property
    def n(self):
        return self.codes.shape[0]

    @property
    def bits_per_coordinate(self):
        return coordinate_bits(self.step,self.coord_range)

    def decode(self):
        """Grid points, shape (n, k)"""
        return self.codes.astype(np.float64)*self.step

#================================================================
#%% Functions
#================================================================
def _check_epsilon(epsilon):
    if not 0<epsilon<1:
        raise PreconditionError(f'Epsilon must be in (0,1) not [{epsilon}]')


def jl_dimension(n,epsilon):
    """
    Projected dimension ceil(12 ln n / ((eps/2)^2 - (eps/2)^3))
    """
    _check_epsilon(epsilon)
    half = epsilon/2
    return math.ceil(12*math.log(n)/(half**2 - half**3))


def grid_step(m,epsilon,k):
    """Quantiser step m^2 (eps/2) / (3 sqrt k)"""
    if not m>0:
        raise PreconditionError(f'Minimum distance must be positive not [{m}]')
    _check_epsilon(epsilon)
    return m**2*(epsilon/2)/(3*math.sqrt(k))


def coordinate_bits(step,coord_range=DEFAULT_COORD_RANGE):
    """Bits per stored coordinate, ceil(log2(2B/s + 1))"""
    return math.ceil(math.log2(2*coord_range/step + 1))


def jl_bits(n,m,epsilon,coord_range=DEFAULT_COORD_RANGE):
    """
    Exact bit total n k ceil(log2(2B/s + 1)) without projecting anything

    >>> jl_bits(100,0.3,0.2) == 100*6141*coordinate_bits(grid_step(0.3,0.2,6141))
    True
    """
    k = jl_dimension(n,epsilon)
    return n*k*coordinate_bits(grid_step(m,epsilon,k),coord_range)


def jl_asymptotic_bits(n,m,epsilon):
    """Leading order n ln n / eps^2 log2(1/(m^2 eps))"""
    return n*math.log(n)/epsilon**2*math.log2(1/(m**2*epsilon))


def _as_array(points):
    if isinstance(points,PointSet):
        return points.points
    return np.atleast_2d(np.asarray(points,dtype=np.float64))


def jl_project(points,epsilon,seed):
    """
    Gaussian projection v = R^T u / sqrt(k)

    Parameters
    ----------
    points : PointSet or array, shape (n, d)
        points in the unit ball
    epsilon : float
        target accuracy in (0,1)
    seed : int
        master seed of the Gaussian rows

    Returns
    -------
    ndarray, shape (n, k)
    """
    X = _as_array(points)
    n,d = X.shape
    k = jl_dimension(max(n,2),epsilon)

    R = gaussian_rows(check_seed(seed),JL_STREAM,0,k,d)
    log(f'Projecting {n} points from {d} to {k} dimensions')

    return (X @ R.T)/math.sqrt(k)


def jl_quantize(projected,m,epsilon,coord_range=DEFAULT_COORD_RANGE):
    """
    Clamp to [-B, B] and round to the grid of step s

    Parameters
    ----------
    projected : ndarray, shape (n, k)
    m : float
        minimum pairwise distance of the original points
    epsilon : float
    coord_range : float, optional
        clamp bound B

    Returns
    -------
    JlSketch
    """
    projected = np.atleast_2d(np.asarray(projected,dtype=np.float64))
    n,k = projected.shape
    step = grid_step(m,epsilon,k)

    limit = math.floor(coord_range/step)
    clamped = np.abs(projected) > coord_range
    clamp_count = int(np.count_nonzero(clamped))
    if clamp_count:
        log(f'{clamp_count} coordinates clamped to +-{coord_range}','brief')

    codes = np.clip(np.rint(projected/step),-limit,limit).astype(np.int64)
    bits = n*k*coordinate_bits(step,coord_range)

    return JlSketch(k=k,step=step,coord_range=float(coord_range),codes=codes,
                    bits=bits,clamp_count=clamp_count)


def jl_sketch(points,m,epsilon,seed,coord_range=DEFAULT_COORD_RANGE):
    """Project and quantise in one go"""
    return jl_quantize(jl_project(points,epsilon,seed),m,epsilon,coord_range)


def jl_estimate_sq_dist(sketch,i,j):
    """
    Squared distance between decoded points i and j

    Raises
    ------
    IndexError
        index out of range
    """
    for index in (i,j):
        if not 0<=index<sketch.n:
            raise IndexError(f'Point index [{index}] out of range for {sketch.n} points')
    diff = (sketch.codes[i] - sketch.codes[j]).astype(np.float64)*sketch.step
    return float(diff @ diff)


def jl_sq_dists(sketch):
    """All decoded squared distances, shape (n, n)"""
    return distance.squareform(distance.pdist(sketch.decode(),'sqeuclidean'))


def min_distance(points):
    """Smallest pairwise distance of the raw points"""
    X = _as_array(points)
    return float(np.sqrt(distance.pdist(X,'sqeuclidean').min()))
