'''
Distance recovery
================================================================
Sketch inner products are decoded with the iterated sine g_l:

    sphere : |x-y|^2 ~ 2 - 2 g_l(<phi(x),phi(y)>)
    ball   : |x-y|^2 ~ nx^2 + ny^2 - 2 nx ny g_l(<phi(x^),phi(y^)>)

where nx, ny are the reconstructed norms. A ball estimate can dip below
zero through sketch and quantisation error; the reported value is then
clamped to 0 and the raw value kept alongside.

Estimates are made pair by pair straight from the packed words, nothing
n x n is built unless a truth matrix is supplied.

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import dataclasses

# Third party libraries
import numpy as np
import pandas as pd

# Local libraries
from .hsk_support import PreconditionError
from .hsk_iterates import g_iter,IterateLevel
from .hsk_signsketch import inner_product,hamming_rows,inner_products_from_hamming
from .hsk_pointset import MODE_BALL

#================================================================
#%% Constants
#================================================================
ESTIMATE_COLUMNS = ['i','j','est_sq_dist']
TRUTH_COLUMNS = ['true_sq_dist','rel_error']

#================================================================
#%% Classes
#================================================================
@dataclasses.dataclass(frozen=True)
class PairEstimate:
    """Recovered inner product and squared distance of one pair"""
    i: int
    j: int
    est_sq_dist: float
    est_inner: float
    raw_sq_dist: float

#================================================================
#%% Functions
#================================================================
def recover_inner(inner,ell):
    """g_l applied to sketch inner products, scalar or array"""
    return g_iter(inner,IterateLevel(ell))


def recover_sq_dist_sphere(inner,ell):
    """
    2 - 2 g_l(inner), in [0,4]

    >>> recover_sq_dist_sphere(-1.0,3)
    4.0
    """
    return 2 - 2*recover_inner(inner,ell)


def recover_sq_dist_ball(inner,ell,n_x,n_y):
    """
    Polarisation with reconstructed norms

    Returns
    -------
    (clamped, raw)
        raw = n_x^2 + n_y^2 - 2 n_x n_y g_l(inner) and its value clamped at 0
    """
    n_x = np.asarray(n_x,dtype=np.float64)
    n_y = np.asarray(n_y,dtype=np.float64)
    if np.any(n_x<=0) or np.any(n_y<=0):
        raise PreconditionError(f'Reconstructed norms must be positive not [{n_x}], [{n_y}]')

    raw = n_x**2 + n_y**2 - 2*n_x*n_y*recover_inner(inner,ell)
    clamped = np.maximum(raw,0.0)
    if np.ndim(raw)==0:
        return float(clamped),float(raw)
    return clamped,raw


def estimate_inner_sphere(a,b,ell):
    """
    g_l(<a,b>) for two packed sketches

    Raises
    ------
    DimensionMismatchError
        if the sketch lengths differ
    """
    return recover_inner(inner_product(a,b),ell)


def estimate_sq_dist_sphere(a,b,ell):
    """
    Recovered |x-y|^2 for two unit vectors, in [0,4]

    >>> from hsketch.hsk_signsketch import pack
    >>> a = pack([1,-1,1,-1])
    >>> estimate_sq_dist_sphere(a,a,2)
    0.0
    """
    return 2 - 2*estimate_inner_sphere(a,b,ell)


def estimate_sq_dist_ball(a,b,ell,n_x,n_y):
    """
    Recovered |x-y|^2 for two ball points, clamped at 0

    Parameters
    ----------
    a, b : PackedSignVector
        sketches of the normalised points
    ell : int
    n_x, n_y : float
        reconstructed norms in (0,1]
    """
    clamped,_ = recover_sq_dist_ball(inner_product(a,b),ell,n_x,n_y)
    return clamped


def estimate_pair(bundle,i,j):
    """
    PairEstimate for points i and j of a bundle

    Raises
    ------
    IndexError
        index out of range
    """
    n = bundle.n
    for index in (i,j):
        if not 0<=index<n:
            raise IndexError(f'Point index [{index}] out of range for {n} points')

    inner = inner_product(bundle.sketch(i),bundle.sketch(j))
    return _make_estimate(bundle,i,j,inner)


def _make_estimate(bundle,i,j,inner):
    ell = bundle.plan.ell
    est_inner = recover_inner(inner,ell)
    if bundle.plan.mode==MODE_BALL:
        norms = bundle.norms()
        est,raw = recover_sq_dist_ball(inner,ell,norms[i],norms[j])
    else:
        est = raw = 2 - 2*est_inner
    return PairEstimate(int(i),int(j),float(est),float(est_inner),float(raw))


def iter_estimates(bundle,pairs=None):
    """
    Generate PairEstimates lazily

    Parameters
    ----------
    bundle : SketchBundle
    pairs : iterable of (i, j), optional
        by default every pair i < j in row order

    Yields
    ------
    PairEstimate
    """
    if pairs is not None:
        for i,j in pairs:
            yield estimate_pair(bundle,i,j)
        return

    words = bundle.words
    ell = bundle.plan.ell
    norms = bundle.norms()
    ball = bundle.plan.mode==MODE_BALL

    for i in range(bundle.n - 1):
        inner = inner_products_from_hamming(hamming_rows(words[i],words[i+1:]),bundle.nbits)
        est_inner = recover_inner(inner,ell)
        if ball:
            est,raw = recover_sq_dist_ball(inner,ell,norms[i],norms[i+1:])
        else:
            est = raw = 2 - 2*est_inner
        for k in range(inner.size):
            yield PairEstimate(i,i + 1 + k,float(est[k]),float(est_inner[k]),float(raw[k]))


def estimate_all(bundle):
    """
    Estimates for all n(n-1)/2 pairs

    Returns
    -------
    list of PairEstimate
    """
    return list(iter_estimates(bundle))


def estimate_frame(bundle,pairs=None,truth=None,diagnostics=False):
    """
    Pair estimates as a DataFrame

    Parameters
    ----------
    bundle : SketchBundle
    pairs : iterable of (i, j), optional
        all pairs by default
    truth : ndarray, shape (n, n), optional
        exact squared distances; adds true_sq_dist and rel_error columns
    diagnostics : bool, optional
        also add est_inner and raw_sq_dist

    Returns
    -------
    pandas.DataFrame
    """
    estimates = list(iter_estimates(bundle,pairs))
    columns = ESTIMATE_COLUMNS + (['est_inner','raw_sq_dist'] if diagnostics else [])

    df = pd.DataFrame([dataclasses.astuple(e) for e in estimates],
                      columns=['i','j','est_sq_dist','est_inner','raw_sq_dist'])
    df = df[columns]

    if truth is not None:
        truth = np.asarray(truth)
        if truth.shape!=(bundle.n,bundle.n):
            raise PreconditionError(f'Truth matrix must be ({bundle.n}, {bundle.n}) not {truth.shape}')
        true_sq = truth[df['i'].to_numpy(dtype=int),df['j'].to_numpy(dtype=int)]
        df['true_sq_dist'] = true_sq
        with np.errstate(divide='ignore',invalid='ignore'):
            df['rel_error'] = np.abs(df['est_sq_dist'].to_numpy() - true_sq)/true_sq

    return df
