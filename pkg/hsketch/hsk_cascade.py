'''
Cascade sign sketches
================================================================
The sketch of a point x is the composition of l sign feature maps

    phi_1(x) = sign(Z_1 x)              Z_1 is D_1 x d
    phi_j(x) = sign(Z_j phi_(j-1)(x))   Z_j is D_j x D_(j-1)

with standard Gaussian matrices Z_j and sign(0) = +1. The implicit
1/sqrt(D) scale never changes a sign so every layer after the first
consumes the raw +-1 pattern of the layer before.

Gaussian matrices are regenerated tile by tile from hsk_gaussian, never
stored. Each layer works through its output rows in blocks of ROW_BLOCK;
a block is computed start to finish by one worker, so the thread count
has no effect on the bits produced.

Ball mode points are sketched through their directions x/|x| and their
norms stored as u32 multiples of the plan's norm step.

Example
-------
>>> ps = PointSet(np.eye(3),'sphere')
>>> plan = make_plan(ps,0.3,master_seed=11)
>>> bundle = sketch_set(ps,plan)
>>> bundle.n, bundle.nbits == plan.N
(3, True)

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import dataclasses
import concurrent.futures

# Third party libraries
import numpy as np

# Local libraries
from .hsk_support import (merge_config,module_log,config_verbosity,PreconditionError,
                          DegenerateInputError,DimensionMismatchError)
from .hsk_gaussian import ROW_BLOCK,COL_BLOCK,gaussian_tile,gaussian_rows,check_seed
from .hsk_signsketch import (PackedSignVector,pack_bit_matrix,unpack_bit_matrix,
                             words_for_bits)
from .hsk_pointset import PointSet,MODE_BALL
from .hsk_planner import MAX_NORM_INDEX

#================================================================
#%% Constants
#================================================================
log = module_log('cascade')

#================================================================
#%% Functions
#================================================================
def project_signs(X,rows):
    """
    sign(X rows^T) as booleans, True for +1 including ties at zero

    Parameters
    ----------
    X : ndarray, shape (n, dim)
    rows : ndarray, shape (D, dim)

    Returns
    -------
    ndarray of bool, shape (n, D)

    Example
    -------
    >>> project_signs(np.array([[1.0,0.0]]),np.array([[1,0],[-1,0],[0,1]]))
    array([[ True, False,  True]])
    """
    X = np.atleast_2d(np.asarray(X,dtype=np.float64))
    rows = np.atleast_2d(np.asarray(rows,dtype=np.float64))
    if X.shape[1]!=rows.shape[1]:
        raise DimensionMismatchError(f'Input dimension [{X.shape[1]}] does not match row length [{rows.shape[1]}]')
    return (X @ rows.T) >= 0


def _column_block(X,start,stop):
    """Columns of a real matrix, or of a bit matrix as +-1"""
    if X.dtype==bool:
        return np.where(X[:,start:stop],1.0,-1.0)
    return X[:,start:stop]


def quantize_norms(norms,norm_step):
    """
    Round norms to the nearest multiple of norm_step

    Returns
    -------
    ndarray of uint32
        grid indices

    >>> quantize_norms([0.5],0.01)
    array([50], dtype=uint32)
    """
    index = np.rint(np.asarray(norms,dtype=np.float64)/norm_step)
    if np.any(index<0) or np.any(index>MAX_NORM_INDEX):
        raise ValueError(f'Norm indices out of u32 range for step [{norm_step}]')
    return index.astype(np.uint32)


def dequantize_norms(indices,norm_step):
    """Grid points index*norm_step"""
    return np.asarray(indices,dtype=np.float64)*norm_step


def cascade_layers(plan):
    """
    The l layers of a plan, input dimension d for the first
    """
    in_dims = (plan.d,) + plan.dims[:-1]
    return [CascadeLayer(j + 1,in_dims[j],plan.dims[j],plan.master_seed)
            for j in range(plan.ell)]


def _check_points(points,plan):
    if points.d!=plan.d:
        raise DimensionMismatchError(f'Points have dimension [{points.d}], plan expects [{plan.d}]')
    if points.mode!=plan.mode:
        raise PreconditionError(f'Points are [{points.mode}] mode, plan is [{plan.mode}] mode')


def _cascade_bits(X,layers,config,keep_levels=False):
    """
    Push directions through every layer in point batches

    Returns
    -------
    list of ndarray of uint64
        packed words after each level when keep_levels is set, otherwise
        only the last level
    """
    n = X.shape[0]
    batch = max(1,int(config.point_batch))
    levels = [[] for _ in layers] if keep_levels else [[]]

    for start in range(0,n,batch):
        bits = X[start:start+batch]
        for j,layer in enumerate(layers):
            bits = layer.project(bits,workers=config.workers)
            if keep_levels:
                levels[j].append(pack_bit_matrix(bits))
        if not keep_levels:
            levels[0].append(pack_bit_matrix(bits))

        log(f'Sketched points {start} to {min(start+batch,n) - 1}')

    return [np.vstack(words) for words in levels]


def sign_feature_map(x,layer):
    """
    One layer applied to one vector

    Parameters
    ----------
    x : array like, shape (layer.in_dim,)
        real vector, or booleans for a +-1 pattern
    layer : CascadeLayer

    Returns
    -------
    PackedSignVector
        length layer.out_dim

    Raises
    ------
    DimensionMismatchError
    DegenerateInputError
        zero vector
    """
    x = np.asarray(x)
    if x.ndim!=1 or x.size!=layer.in_dim:
        raise DimensionMismatchError(f'Layer {layer.layer_index} expects length [{layer.in_dim}] not {x.shape}')
    if x.dtype!=bool:
        x = x.astype(np.float64)
        if not np.any(x):
            raise DegenerateInputError('Cannot sketch the zero vector')

    bits = layer.project(x[None,:])
    return PackedSignVector.from_bits(bits[0])


def sketch_point(x,plan,config=None):
    """
    Level l sketch of a single point

    Ball mode points are normalised first; sphere mode points must be
    unit vectors.

    Returns
    -------
    PackedSignVector
        length plan.N
    """
    config = merge_config(config)
    points = PointSet(np.asarray(x,dtype=np.float64)[None,:],plan.mode)
    _check_points(points,plan)

    words = _cascade_bits(points.normalized(),cascade_layers(plan),config)[-1]
    return PackedSignVector(words[0],plan.N)


def sketch_levels(points,plan,config=None):
    """
    Packed sketches after every level

    Returns
    -------
    list of ndarray of uint64
        entry j-1 is the (n, ceil(D_j/64)) word matrix of level j
    """
    config = merge_config(config)
    _check_points(points,plan)
    return _cascade_bits(points.normalized(),cascade_layers(plan),config,keep_levels=True)


@config_verbosity
def sketch_set(points,plan,config=None):
    """
    Sketch every point of a set

    Parameters
    ----------
    points : PointSet
    plan : CascadePlan
        plan made for these points
    config : dict like, optional
        workers and point_batch are read from it

    Returns
    -------
    SketchBundle
    """
    config = merge_config(config)
    _check_points(points,plan)
    if points.n!=plan.n:
        raise PreconditionError(f'Plan is for [{plan.n}] points not [{points.n}]')

    log(f'Sketching {points.n} points through {plan.ell} level(s), N = {plan.N}','brief')

    words = _cascade_bits(points.normalized(),cascade_layers(plan),config)[-1]

    norm_indices = None
    if plan.mode==MODE_BALL:
        norm_indices = quantize_norms(points.norms,plan.norm_step)

    return SketchBundle(plan,words,norm_indices)


def extend_bundle(bundle,points,config=None):
    """
    Sketch new points with a bundle's plan and append them

    Each point is compressed independently so the stored sketches are
    unchanged; the plan's n becomes the new total.
    """
    config = merge_config(config)
    plan = bundle.plan
    _check_points(points,plan)

    words = _cascade_bits(points.normalized(),cascade_layers(plan),config)[-1]

    norm_indices = None
    if plan.mode==MODE_BALL:
        norm_indices = np.concatenate([bundle.norm_indices,quantize_norms(points.norms,plan.norm_step)])

    new_plan = dataclasses.replace(plan,n=bundle.n + points.n)
    return SketchBundle(new_plan,np.vstack([bundle.words,words]),norm_indices)

#================================================================
#%% Classes
#================================================================
class CascadeLayer:
    """
    One sign feature map of a cascade

    Parameters
    ----------
    layer_index : int
        j in 1..l, also the Gaussian stream
    in_dim : int
        D_(j-1), d for the first layer
    out_dim : int
        D_j
    master_seed : int
    """

    def __init__(self,layer_index,in_dim,out_dim,master_seed):
        assert layer_index>=1, f'Layer index must be >= 1 not [{layer_index}]'
        assert in_dim>=1 and out_dim>=1, f'Layer dimensions must be positive ({in_dim},{out_dim})'

        self.layer_index = int(layer_index)
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.master_seed = check_seed(master_seed)

    def __repr__(self):
        return f'CascadeLayer({self.layer_index}, {self.in_dim} -> {self.out_dim})'

    @property
    def n_row_blocks(self):
        return (self.out_dim + ROW_BLOCK - 1)//ROW_BLOCK

    def rows(self,start=0,stop=None):
        """Gaussian rows start .. stop-1 of this layer"""
        stop = self.out_dim if stop is None else stop
        return gaussian_rows(self.master_seed,self.layer_index,start,stop,self.in_dim)

    def _row_block_signs(self,X,row_block):
        """Signs of one block of output rows, accumulated tile by tile"""
        n_rows = min(ROW_BLOCK,self.out_dim - row_block*ROW_BLOCK)
        acc = np.zeros((X.shape[0],ROW_BLOCK))

        for col_block,start in enumerate(range(0,self.in_dim,COL_BLOCK)):
            stop = min(start + COL_BLOCK,self.in_dim)
            tile = gaussian_tile(self.master_seed,self.layer_index,row_block,col_block,stop - start)
            acc += _column_block(X,start,stop) @ tile.T

        return acc[:,:n_rows] >= 0

    def project(self,X,workers=1):
        """
        Signs of all output rows for a batch of inputs

        Parameters
        ----------
        X : ndarray, shape (n, in_dim)
            real directions, or booleans standing for +-1
        workers : int, optional
            threads sharing the row blocks

        Returns
        -------
        ndarray of bool, shape (n, out_dim)
        """
        X = np.atleast_2d(X)
        if X.shape[1]!=self.in_dim:
            raise DimensionMismatchError(f'Layer {self.layer_index} expects [{self.in_dim}] columns not [{X.shape[1]}]')
        if X.dtype!=bool:
            X = X.astype(np.float64)

        out = np.empty((X.shape[0],self.out_dim),dtype=bool)
        blocks = range(self.n_row_blocks)

        def fill(row_block):
            start = row_block*ROW_BLOCK
            signs = self._row_block_signs(X,row_block)
            out[:,start:start + signs.shape[1]] = signs

        if workers>1 and self.n_row_blocks>1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=int(workers)) as executor:
                list(executor.map(fill,blocks))
        else:
            for row_block in blocks:
                fill(row_block)

        return out


class SketchBundle:
    """
    Sketch of a point set: plan, packed words and quantised norms

    Parameters
    ----------
    plan : CascadePlan
    words : ndarray of uint64, shape (n, ceil(N/64))
    norm_indices : ndarray of uint32, shape (n,), optional
        present exactly in ball mode
    """

    def __init__(self,plan,words,norm_indices=None):
        words = np.array(words,dtype=np.uint64)
        if words.ndim!=2 or words.shape!=(plan.n,words_for_bits(plan.N)):
            raise DimensionMismatchError(f'Bundle words must be ({plan.n}, {words_for_bits(plan.N)}) not {words.shape}')

        if plan.mode==MODE_BALL:
            if norm_indices is None:
                raise PreconditionError('Ball mode bundles need quantised norms')
            norm_indices = np.array(norm_indices,dtype=np.uint32)
            if norm_indices.shape!=(plan.n,):
                raise DimensionMismatchError(f'Expected {plan.n} norm indices not {norm_indices.shape}')
            norm_indices.flags.writeable = False
        elif norm_indices is not None:
            raise PreconditionError('Sphere mode bundles carry no norms')

        words.flags.writeable = False
        self.plan = plan
        self._words = words
        self._norm_indices = norm_indices

    def __repr__(self):
        return f'SketchBundle(n={self.n}, N={self.nbits}, mode={self.plan.mode})'

    def __len__(self):
        return self.n

    def __eq__(self,other):
        if not isinstance(other,SketchBundle):
            return NotImplemented
        same_norms = (self._norm_indices is None and other._norm_indices is None) or (
            self._norm_indices is not None and other._norm_indices is not None
            and np.array_equal(self._norm_indices,other._norm_indices))
        return self.plan==other.plan and np.array_equal(self._words,other._words) and same_norms

    @property
    def n(self):
        return self._words.shape[0]

    @property
    def nbits(self):
        return self.plan.N

    @property
    def words(self):
        return self._words

    @property
    def norm_indices(self):
        return self._norm_indices

    def sketch(self,i):
        """PackedSignVector of point i"""
        return PackedSignVector(self._words[i],self.plan.N)

    @property
    def sketches(self):
        return [self.sketch(i) for i in range(self.n)]

    def norms(self):
        """
        Reconstructed norms, all ones in sphere mode
        """
        if self._norm_indices is None:
            return np.ones(self.n)
        return dequantize_norms(self._norm_indices,self.plan.norm_step)

    def signs(self):
        """All sketches unpacked to +-1, shape (n, N)"""
        return np.where(unpack_bit_matrix(self._words,self.plan.N),1,-1).astype(np.int8)
