'''
Point sets
================================================================
The input to planning and sketching: n points in R^d, either all on the
unit sphere ('sphere' mode) or inside the unit ball with non-zero norms
('ball' mode).

'''


#================================================================
#%% Imports
#================================================================
# Third party libraries
import numpy as np

# Local libraries
from .hsk_support import ObjDict,PreconditionError,DegenerateInputError

#================================================================
#%% Constants
#================================================================
MODE_SPHERE = 'sphere'
MODE_BALL = 'ball'
MODES = (MODE_SPHERE,MODE_BALL)

# Allowed distance of a sphere point's norm from 1
NORM_TOLERANCE = 1e-9

#================================================================
#%% Functions
#================================================================
def check_mode(mode):
    if mode not in MODES:
        raise ValueError(f'Mode must be one of {MODES} not [{mode}]')
    return mode

#================================================================
#%% Classes
#================================================================
class PointSet:
    """
    Immutable n x d point set with a mode and provenance

    Parameters
    ----------
    points : array like, shape (n, d)
    mode : str
        'sphere' or 'ball'
    provenance : dict, optional
        how the set was made, e.g. generator name and seed

    Raises
    ------
    PreconditionError
        sphere points with norm off 1 by more than 1e-9, ball points
        with norm above 1 + 1e-9
    DegenerateInputError
        a zero vector in ball mode

    Example
    -------
    >>> ps = PointSet([[1,0],[0,1]],'sphere')
    >>> ps.n, ps.d
    (2, 2)
    """

    def __init__(self,points,mode=MODE_SPHERE,provenance=None):
        points = np.array(points,dtype=np.float64)
        if points.ndim!=2 or points.shape[0]<1 or points.shape[1]<1:
            raise ValueError(f'Points must be an (n,d) array with n,d >= 1 not {points.shape}')
        if not np.all(np.isfinite(points)):
            raise ValueError('Points must be finite')

        self.mode = check_mode(mode)

        norms = np.linalg.norm(points,axis=1)
        if self.mode==MODE_SPHERE:
            off = np.flatnonzero(np.abs(norms - 1) > NORM_TOLERANCE)
            if off.size:
                raise PreconditionError(f'Point {off[0]} is not on the unit sphere, norm [{norms[off[0]]!r}]')
        else:
            zero = np.flatnonzero(norms==0)
            if zero.size:
                raise DegenerateInputError(f'Point {zero[0]} is the zero vector')
            big = np.flatnonzero(norms > 1 + NORM_TOLERANCE)
            if big.size:
                raise PreconditionError(f'Point {big[0]} is outside the unit ball, norm [{norms[big[0]]!r}]')

        points.flags.writeable = False
        norms.flags.writeable = False
        self._points = points
        self._norms = norms
        self.provenance = ObjDict(**(provenance or {}))

    @property
    def points(self):
        return self._points

    @property
    def norms(self):
        return self._norms

    @property
    def n(self):
        return self._points.shape[0]

    @property
    def d(self):
        return self._points.shape[1]

    def normalized(self):
        """Points scaled to unit norm"""
        return self._points/self._norms[:,None]

    def subset(self,indexes):
        """New PointSet holding the selected rows"""
        return PointSet(self._points[np.asarray(indexes)],self.mode,self.provenance)

    def __len__(self):
        return self.n

    def __eq__(self,other):
        if not isinstance(other,PointSet):
            return NotImplemented
        return self.mode==other.mode and np.array_equal(self._points,other._points)

    def __repr__(self):
        return f'PointSet(n={self.n}, d={self.d}, mode={self.mode})'
