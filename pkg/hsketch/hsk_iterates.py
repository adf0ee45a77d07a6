'''
Iterated arcsine and sine maps
================================================================
The cascade turns an inner product t into f_l(t) after l sign layers,
where

    f(t) = (2/pi) arcsin(t)        g(t) = sin(pi t / 2)

and f_l, g_l are the l-fold compositions. g_l inverts f_l on [-1,1],
so recovery applies g_l to a sketch inner product.

All functions take scalars or numpy arrays and return the same kind.
Arguments up to DOMAIN_TOLERANCE outside [-1,1] are clamped; anything
further out is a DomainError.

Example
-------
>>> round(f_iter(0.5,1),12)
0.333333333333
>>> abs(g_iter(f_iter(0.3,4),4) - 0.3) < 1e-12
True

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import collections

# Third party libraries
import numpy as np

# Local libraries
from .hsk_support import DomainError

#================================================================
#%% Constants
#================================================================
DOMAIN_TOLERANCE = 1e-12
INEQUALITY_TOLERANCE = 1e-12

HALF_PI = np.pi/2

# One failed inequality check
Violation = collections.namedtuple('Violation',['inequality','t','ell','lhs','rhs'])

#================================================================
#%% Classes
#================================================================
class IterateLevel(int):
    """
    Number of compositions, an integer >= 1

    >>> IterateLevel(3)
    3
    >>> IterateLevel(0)
    Traceback (most recent call last):
    ...
    ValueError: Iterate level must be an integer >= 1 not [0]
    """

    def __new__(cls,ell):
        try:
            ell_int = int(ell)
        except (TypeError,ValueError):
            raise ValueError(f'Iterate level must be an integer >= 1 not [{ell}]') from None

        if ell_int!=ell or ell_int<1:
            raise ValueError(f'Iterate level must be an integer >= 1 not [{ell}]')

        return super().__new__(cls,ell_int)

#================================================================
#%% Functions
#================================================================
def _clamp(t):
    """
    Clamp t into [-1,1], rejecting values beyond the rounding tolerance

    Returns
    -------
    (ndarray, bool)
        clamped float array and whether the input was a scalar
    """
    t_arr = np.asarray(t,dtype=np.float64)
    is_scalar = t_arr.ndim==0

    if np.any(np.isnan(t_arr)):
        raise DomainError('Iterate argument is NaN')

    outside = np.abs(t_arr) > 1 + DOMAIN_TOLERANCE
    if np.any(outside):
        worst = t_arr[outside].flat[0] if not is_scalar else float(t_arr)
        raise DomainError(f'Iterate argument outside [-1,1] [{worst!r}]')

    return np.clip(t_arr,-1.0,1.0),is_scalar


def _restore(values,is_scalar):
    if is_scalar:
        return float(values)
    return values


def f(t):
    """
    Single arcsine step f(t) = (2/pi) arcsin(t)

    Odd, increasing, fixes -1, 0 and 1.
    """
    t_arr,is_scalar = _clamp(t)
    return _restore(np.arcsin(t_arr)/HALF_PI,is_scalar)


def g(t):
    """
    Single sine step g(t) = sin(pi t/2), the inverse of f
    """
    t_arr,is_scalar = _clamp(t)
    return _restore(np.sin(HALF_PI*t_arr),is_scalar)


def f_iter(t,ell):
    """
    l-fold composition of f, computed as a literal loop

    Parameters
    ----------
    t : float or array
        values in [-1,1]
    ell : int
        number of compositions, >= 1

    Returns
    -------
    float or ndarray
        f_l(t), same kind as t

    Raises
    ------
    DomainError
        if |t| > 1 + 1e-12
    ValueError
        if ell is not an integer >= 1
    """
    ell = IterateLevel(ell)
    values,is_scalar = _clamp(t)

    for _ in range(ell):
        # arcsin(1) is the float nearest pi/2 so the ratio stays in [-1,1]
        values = np.clip(np.arcsin(values)/HALF_PI,-1.0,1.0)

    return _restore(values,is_scalar)


def g_iter(t,ell):
    """
    l-fold composition of g, computed as a literal loop

    g_iter(f_iter(t,l),l) recovers t to within a few ulps for l <= 6.

    Parameters
    ----------
    t : float or array
        values in [-1,1]
    ell : int
        number of compositions, >= 1

    Returns
    -------
    float or ndarray
        g_l(t)
    """
    ell = IterateLevel(ell)
    values,is_scalar = _clamp(t)

    for _ in range(ell):
        values = np.sin(HALF_PI*values)

    return _restore(values,is_scalar)


def _g_complements(t,ell):
    """
    Complements c_k = 1 - g_k(|t|) for k = 0 .. l

    Uses c_{k+1} = 2 sin^2(pi c_k / 4), which keeps full relative
    accuracy when g_k(|t|) is within rounding of 1.
    """
    complement = 1 - np.abs(t)
    complements = [complement]
    for _ in range(ell):
        complement = 2*np.sin(np.pi*complement/4)**2
        complements.append(complement)
    return complements


def g_iter_complement(t,ell):
    """
    1 - g_l(|t|) without cancellation near |t| = 1

    Parameters
    ----------
    t : float or array
        values in [-1,1]
    ell : int
        number of compositions

    Returns
    -------
    float or ndarray
    """
    ell = IterateLevel(ell)
    values,is_scalar = _clamp(t)
    return _restore(_g_complements(values,ell)[-1],is_scalar)


def g_iter_derivative(t,ell):
    """
    Derivative of g_l by the chain rule

        g_l'(t) = prod_k (pi/2) cos(pi g_k(t)/2),  k = 0 .. l-1

    g_l' is even, and cos(pi g_k/2) = sin(pi (1-g_k)/2) is evaluated from
    the complements, so at t = +-1 the one sided limit 0 comes out exactly.

    Parameters
    ----------
    t : float or array
        values in [-1,1]
    ell : int
        number of compositions

    Returns
    -------
    float or ndarray
        g_l'(t), always >= 0
    """
    ell = IterateLevel(ell)
    values,is_scalar = _clamp(t)

    derivative = np.ones_like(values)
    for complement in _g_complements(values,ell)[:-1]:
        derivative = derivative*HALF_PI*np.sin(HALF_PI*complement)

    return _restore(derivative,is_scalar)


def check_interval_inequalities(t_grid,max_ell,tolerance=INEQUALITY_TOLERANCE):
    """
    Numerically check the analytic bounds on the iterates over a grid

    Checks, for every l in 1..max_ell (check e only for l = 1):

    (a) g_l'(f_l(t)) <= pi^l / 2^((l+1)/2) (2-2t)^(1-2^-l)           t in [0,1]
    (b) 0 <= g_l'(t) <= (pi/2)^l                                     t in [-1,1]
    (c) |f_l(t)| <= |t|                                              t in [-1,1]
    (d) 1-|f_l(t)| >= (1-|t|)^((2/3)^l)                              t in [-1,1]
    (e) 1-f(t) <= sqrt(1-t)                                          t in [0,1]
    (f) 1-f_l(t) <= (2-2t)^(2^-l)                                    t in [0,1]
    (g) g_l'(t) <= pi^l / 2^((l+1)/2) (2-2g_l(t))^(1-2^-l)           t in [0,1]

    A check fails when lhs exceeds rhs by more than tolerance (or, for
    the lower bounds, falls short by more than tolerance).

    Parameters
    ----------
    t_grid : array like
        grid of points in [-1,1]
    max_ell : int
        largest number of compositions to check
    tolerance : float, optional
        absolute slack, by default 1e-12

    Returns
    -------
    list of Violation
        empty when every inequality holds

    Example
    -------
    >>> check_interval_inequalities(np.linspace(-1,1,10001),6)
    []
    """
    t_all,_ = _clamp(np.atleast_1d(t_grid))
    t_pos = t_all[t_all>=0]
    max_ell = IterateLevel(max_ell)

    violations = []

    def record(label,t,ell,lhs,rhs):
        # lhs <= rhs is required
        bad = lhs - rhs > tolerance
        for ti,li,ri in zip(t[bad],np.broadcast_to(lhs,t.shape)[bad],np.broadcast_to(rhs,t.shape)[bad]):
            violations.append(Violation(label,float(ti),int(ell),float(li),float(ri)))

    for ell in range(1,max_ell+1):
        coeff = np.pi**ell/2**((ell+1)/2)
        expo = 1 - 2.0**-ell

        lhs = g_iter_derivative(f_iter(t_pos,ell),ell)
        rhs = coeff*(2-2*t_pos)**expo
        record('a',t_pos,ell,lhs,rhs)

        deriv = g_iter_derivative(t_all,ell)
        record('b',t_all,ell,-deriv,np.zeros_like(t_all))
        record('b',t_all,ell,deriv,np.full_like(t_all,HALF_PI**ell))

        f_vals = f_iter(t_all,ell)
        record('c',t_all,ell,np.abs(f_vals),np.abs(t_all))

        # lower bound written as rhs <= lhs
        record('d',t_all,ell,(1-np.abs(t_all))**((2/3)**ell),1-np.abs(f_vals))

        if ell==1:
            record('e',t_pos,ell,1-f_iter(t_pos,1),np.sqrt(1-t_pos))

        record('f',t_pos,ell,1-f_iter(t_pos,ell),(2-2*t_pos)**(2.0**-ell))

        lhs = g_iter_derivative(t_pos,ell)
        rhs = coeff*(2*g_iter_complement(t_pos,ell))**expo
        record('g',t_pos,ell,lhs,rhs)

    return violations


# Name of the same check in the public operation list
check_appendix_inequalities = check_interval_inequalities
