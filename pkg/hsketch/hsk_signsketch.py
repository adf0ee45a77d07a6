'''
Packed sign vectors
================================================================
A sketch of length N is a vector in {-1,+1}^N / sqrt(N). It is stored as
bits packed into little-endian 64 bit words:

* bit i lives in word i // 64 at bit position i % 64 (LSB first)
* bit value 1 means +1, 0 means -1
* padding bits past N are zero

Inner products come straight from the Hamming distance,

    <a,b> = (N - 2 hamming(a,b)) / N

which is exact integer arithmetic followed by one division.

Example
-------
>>> a = pack([1,-1,1,1])
>>> b = pack([1,1,1,-1])
>>> hamming(a,b)
2
>>> inner_product(a,b)
0.0

'''


#================================================================
#%% Imports
#================================================================
# Third party libraries
import numpy as np

# Local libraries
from .hsk_support import DimensionMismatchError

#================================================================
#%% Constants
#================================================================
WORD_BITS = 64

# SWAR popcount masks
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)

#================================================================
#%% Functions
#================================================================
def words_for_bits(nbits):
    """Number of 64 bit words that hold nbits"""
    return (int(nbits) + WORD_BITS - 1)//WORD_BITS


def _bit_count64_swar(arr):
    # Parallel bit count, exact on uint64
    arr = arr - ((arr >> np.uint64(1)) & _M1)
    arr = (arr & _M2) + ((arr >> np.uint64(2)) & _M2)
    arr = (arr + (arr >> np.uint64(4))) & _M4
    return (arr*_H01) >> np.uint64(56)


def popcount64(words):
    """
    Number of set bits in each uint64 word

    Parameters
    ----------
    words : ndarray of uint64

    Returns
    -------
    ndarray
        bit counts, same shape
    """
    words = np.asarray(words,dtype=np.uint64)
    if hasattr(np,'bitwise_count'):
        return np.bitwise_count(words)
    return _bit_count64_swar(words)


def pack_bit_matrix(bits):
    """
    Pack a boolean matrix row-wise into uint64 words

    Parameters
    ----------
    bits : ndarray of bool, shape (n, N)
        True for +1

    Returns
    -------
    ndarray of uint64, shape (n, ceil(N/64))
    """
    bits = np.asarray(bits,dtype=bool)
    if bits.ndim!=2:
        raise ValueError(f'Bit matrix must be 2D not {bits.shape}')

    n_rows,nbits = bits.shape
    n_words = words_for_bits(nbits)

    padded = np.zeros((n_rows,n_words*WORD_BITS),dtype=bool)
    padded[:,:nbits] = bits

    packed = np.packbits(padded,axis=1,bitorder='little')
    return np.ascontiguousarray(packed).view('<u8').astype(np.uint64)


def unpack_bit_matrix(words,nbits):
    """
    Inverse of pack_bit_matrix

    Parameters
    ----------
    words : ndarray of uint64, shape (n, W)
    nbits : int

    Returns
    -------
    ndarray of bool, shape (n, nbits)
    """
    words = np.atleast_2d(np.asarray(words,dtype=np.uint64))
    as_bytes = np.ascontiguousarray(words.astype('<u8')).view(np.uint8)
    return np.unpackbits(as_bytes,axis=1,bitorder='little')[:,:nbits].astype(bool)


def hamming_rows(row_words,block_words):
    """
    Hamming distances between one packed row and a block of packed rows

    Parameters
    ----------
    row_words : ndarray of uint64, shape (W,)
    block_words : ndarray of uint64, shape (k, W)

    Returns
    -------
    ndarray of int64, shape (k,)
    """
    xor = np.bitwise_xor(np.asarray(block_words,dtype=np.uint64),np.asarray(row_words,dtype=np.uint64))
    return popcount64(xor).sum(axis=-1,dtype=np.int64)


def pack(signs,nbits=None):
    """
    Pack a +-1 sign sequence

    Parameters
    ----------
    signs : sequence of +-1
    nbits : int, optional
        expected length, checked when given

    Returns
    -------
    PackedSignVector
    """
    signs = np.asarray(signs)
    if signs.ndim!=1:
        raise ValueError(f'Signs must be a 1D sequence not {signs.shape}')

    if nbits is not None and signs.size!=nbits:
        raise DimensionMismatchError(f'Expected {nbits} signs, got [{signs.size}]')

    if not np.all((signs==1) | (signs==-1)):
        raise ValueError('Signs must all be +1 or -1')

    return PackedSignVector.from_bits(signs==1)


def hamming(a,b):
    """
    Number of positions where two sketches differ

    Raises
    ------
    DimensionMismatchError
        if the sketches have different lengths
    """
    _check_same_length(a,b)
    return int(popcount64(np.bitwise_xor(a.words,b.words)).sum(dtype=np.int64))


def inner_product(a,b):
    """
    Normalised inner product (N - 2 hamming)/N in [-1,1]

    Raises
    ------
    DimensionMismatchError
        if the sketches have different lengths
    """
    distance = hamming(a,b)
    return (a.nbits - 2*distance)/a.nbits


def inner_products_from_hamming(distances,nbits):
    """
    Vectorised (N - 2 h)/N, bit identical to inner_product
    """
    distances = np.asarray(distances,dtype=np.int64)
    return (nbits - 2*distances).astype(np.float64)/nbits


def _check_same_length(a,b):
    if a.nbits!=b.nbits:
        raise DimensionMismatchError(f'Sketch lengths differ [{a.nbits}] vs [{b.nbits}]')

#================================================================
#%% Classes
#================================================================
class PackedSignVector:
    """
    Immutable packed sign sketch

    Parameters
    ----------
    words : ndarray of uint64
        ceil(nbits/64) words with zero padding
    nbits : int
        sketch length N >= 1

    Example
    -------
    >>> v = PackedSignVector.from_bits([True]*65)
    >>> v.words.size
    2
    >>> v.to_bytes().hex()[:16]
    'ffffffffffffffff'
    """

    __slots__ = ('_words','_nbits')

    def __init__(self,words,nbits):
        nbits = int(nbits)
        if nbits<1:
            raise ValueError(f'Sketch length must be >= 1 not [{nbits}]')

        words = np.array(words,dtype=np.uint64).ravel()
        if words.size!=words_for_bits(nbits):
            raise DimensionMismatchError(f'{nbits} bits need {words_for_bits(nbits)} words not [{words.size}]')

        spare = words.size*WORD_BITS - nbits
        if spare and int(words[-1]) >> (WORD_BITS - spare):
            raise ValueError('Padding bits of a packed sign vector must be zero')

        words.flags.writeable = False
        self._words = words
        self._nbits = nbits

    @classmethod
    def from_bits(cls,bits):
        """Build from a boolean sequence, True for +1"""
        bits = np.asarray(bits,dtype=bool)
        return cls(pack_bit_matrix(bits[None,:])[0],bits.size)

    @classmethod
    def from_bytes(cls,data,nbits):
        """
        Build from the little-endian word bytes written by to_bytes()
        """
        n_words = words_for_bits(nbits)
        if len(data)!=n_words*8:
            raise DimensionMismatchError(f'{nbits} bits need {n_words*8} bytes not [{len(data)}]')
        return cls(np.frombuffer(data,dtype='<u8').astype(np.uint64),nbits)

    @property
    def words(self):
        return self._words

    @property
    def nbits(self):
        return self._nbits

    def to_bytes(self):
        return self._words.astype('<u8').tobytes()

    def bits(self):
        """Unpacked boolean bits, True for +1"""
        return unpack_bit_matrix(self._words[None,:],self._nbits)[0]

    def signs(self):
        """Unpacked +-1 signs as int8"""
        return np.where(self.bits(),1,-1).astype(np.int8)

    def __len__(self):
        return self._nbits

    def __eq__(self,other):
        if not isinstance(other,PackedSignVector):
            return NotImplemented
        return self._nbits==other._nbits and np.array_equal(self._words,other._words)

    def __hash__(self):
        return hash((self._nbits,self.to_bytes()))

    def __repr__(self):
        return f'PackedSignVector(nbits={self._nbits})'
