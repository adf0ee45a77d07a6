'''
Counter-based Gaussian rows
================================================================
Random matrices in hsketch are never stored. Every entry is a pure
function of

    (master_seed, stream, row, column)

so any row block can be regenerated in isolation, in any order and on
any thread, and a point sketched later sees exactly the same matrix.

The matrix is cut into fixed tiles of ROW_BLOCK x COL_BLOCK entries.
Tile (rb, cb) of stream s is filled from a Philox-4x64 generator keyed
with (master_seed, s) and started at counter (0, 0, cb, rb). Inside a
tile the raw 64 bit outputs run down the columns, so entry (r, c) of the
tile is output number c*ROW_BLOCK + r. Tiles narrower than COL_BLOCK use
a prefix of the same stream.

Each 64 bit output becomes a uniform in (0,1) from its top 52 bits,

    u = ((x >> 12) + 0.5) * 2^-52

and a standard normal through the inverse normal CDF.

Streams: the cascade uses stream = layer index (1 .. l), the JL
baseline uses JL_STREAM.

'''


#================================================================
#%% Imports
#================================================================
# Third party libraries
import numpy as np
from scipy import special

#================================================================
#%% Constants
#================================================================
ROW_BLOCK = 256
COL_BLOCK = 1024

JL_STREAM = 0

MASK64 = (1 << 64) - 1
_U52 = 2.0**-52

#================================================================
#%% Functions
#================================================================
def check_seed(master_seed):
    """
    Master seeds are unsigned 64 bit integers

    Returns
    -------
    int
    """
    seed = int(master_seed)
    if seed!=master_seed or not 0 <= seed <= MASK64:
        raise ValueError(f'Master seed must be an integer in [0, 2^64) not [{master_seed}]')
    return seed


def tile_generator(master_seed,stream,row_block,col_block):
    """
    Philox bit generator positioned at the start of one tile
    """
    key = np.array([check_seed(master_seed),int(stream)],dtype=np.uint64)
    counter = np.array([0,0,int(col_block),int(row_block)],dtype=np.uint64)
    return np.random.Philox(key=key,counter=counter)


def uniforms_from_raw(raw):
    """
    Map raw uint64 outputs to uniforms strictly inside (0,1)
    """
    raw = np.asarray(raw,dtype=np.uint64)
    return ((raw >> np.uint64(12)).astype(np.float64) + 0.5)*_U52


def gaussian_tile(master_seed,stream,row_block,col_block,n_cols=COL_BLOCK):
    """
    One ROW_BLOCK x n_cols tile of standard normals

    Parameters
    ----------
    master_seed : int
    stream : int
        layer index, or JL_STREAM
    row_block, col_block : int
        tile coordinates
    n_cols : int, optional
        columns wanted, at most COL_BLOCK

    Returns
    -------
    ndarray, shape (ROW_BLOCK, n_cols)
    """
    assert 0 < n_cols <= COL_BLOCK, f'Tile width must be in (0,{COL_BLOCK}] not [{n_cols}]'

    raw = tile_generator(master_seed,stream,row_block,col_block).random_raw(ROW_BLOCK*n_cols)
    normals = special.ndtri(uniforms_from_raw(raw))

    return normals.reshape(n_cols,ROW_BLOCK).T


def gaussian_row_block(master_seed,stream,row_block,n_cols):
    """
    All columns of one row block

    Returns
    -------
    ndarray, shape (ROW_BLOCK, n_cols)
    """
    tiles = []
    for col_block,start in enumerate(range(0,n_cols,COL_BLOCK)):
        width = min(COL_BLOCK,n_cols - start)
        tiles.append(gaussian_tile(master_seed,stream,row_block,col_block,width))
    return np.hstack(tiles)


def gaussian_rows(master_seed,stream,start,stop,n_cols):
    """
    Rows start .. stop-1 of the Gaussian matrix of a stream

    Parameters
    ----------
    master_seed : int
    stream : int
    start, stop : int
        row range
    n_cols : int
        row length

    Returns
    -------
    ndarray, shape (stop-start, n_cols)

    Example
    -------
    >>> a = gaussian_rows(7,1,0,300,5)
    >>> b = gaussian_rows(7,1,290,300,5)
    >>> bool((a[290:] == b).all())
    True
    """
    if not 0 <= start <= stop:
        raise ValueError(f'Bad row range [{start},{stop})')

    blocks = []
    first = start//ROW_BLOCK
    last = (stop - 1)//ROW_BLOCK if stop>start else first - 1
    for row_block in range(first,last + 1):
        block = gaussian_row_block(master_seed,stream,row_block,n_cols)
        lo = max(start - row_block*ROW_BLOCK,0)
        hi = min(stop - row_block*ROW_BLOCK,ROW_BLOCK)
        blocks.append(block[lo:hi])

    if not blocks:
        return np.empty((0,n_cols))
    return np.vstack(blocks)
