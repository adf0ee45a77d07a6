'''
Storage functions for hsketch
================================================================
Everything that goes to or comes from disk:

* a `save` accessor bolted onto xarray datasets, used for trial results
  (JSON, Excel, CSV)
* the plain text point file: header line "n d mode" then one point per
  line, values written with 17 significant digits so they read back
  exactly. Lines starting with '#' are comments.
* the plan text dump, one "key = value" line per plan field
* the binary sketch file

Sketch file layout, all integers little-endian::

    magic        8 bytes  b'HSKETCH1'
    version      u16      1
    mode         u8       0 sphere, 1 ball
    n, d         u64, u64
    ell          u16
    epsilon, m, r, rho    f64 x 4
    master_seed  u64
    dims         ell x u64
    norm_step    f64      0 in sphere mode
    payload      n records of ceil(N/64) u64 words
    norm block   n x u32  ball mode only
    crc32        u32      of everything before it

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import os
import ast
import json
import struct
import zlib

# Third party libraries
import numpy as np
import pandas as pd
import xarray as xr

# Local libraries
from .hsk_support import IntegrityError,module_log
from .hsk_pointset import PointSet,MODES,MODE_SPHERE,MODE_BALL
from .hsk_planner import CascadePlan
from .hsk_signsketch import words_for_bits
from .hsk_cascade import SketchBundle

#================================================================
#%% Constants
#================================================================
SKETCH_MAGIC = b'HSKETCH1'
SKETCH_VERSION = 1

MODE_CODES = {MODE_SPHERE:0,MODE_BALL:1}
CODE_MODES = {code:mode for mode,code in MODE_CODES.items()}

# magic, version, mode, n, d, ell, epsilon, m, r, rho, master_seed
HEADER_STRUCT = struct.Struct('<8sHBQQHddddQ')
NORM_STEP_STRUCT = struct.Struct('<d')
CRC_STRUCT = struct.Struct('<I')

NORM_INDEX_BITS = 32

POINT_FORMAT = '%.17g'

# Plan fields written to the text dump, in order
PLAN_FIELDS = ['n','d','mode','epsilon','m','r','rho','ell','dims','master_seed',
               'norm_step','delta','working_epsilon','n_constant','target']

# Derived values printed with a plan and checked when read back
PLAN_DERIVED = ['N','norm_bits','bit_budget']

log = module_log('storage')

#================================================================
#%% Functions
#================================================================
def _json_default(value):
    """Convert numpy scalars and arrays met in dataset attributes"""
    if isinstance(value,np.generic):
        return value.item()
    if isinstance(value,np.ndarray):
        return value.tolist()
    raise TypeError(f'Cannot store [{type(value).__name__}] in JSON')


def dataset_to_json_str(ds):
    """
    Store xarray dataset to JSON string

    Parameters
    ------------
    ds : xarray Dataset
        Dataset to store

    Returns
    -------
    json string
    """
    return json.dumps(ds.to_dict(),default=_json_default)


def dataset_to_json(filename, ds):
    """
    Store xarray dataset to JSON file

    Parameters
    ------------
    filename : str
        Full path/filename

    ds : xarray Dataset
        Dataset to store
    """
    json_dict = ds.to_dict()

    with open(filename, "w") as write_file:
        json.dump(json_dict, write_file,indent=4,default=_json_default)

# -----------------------------------------------------------------------------
def json_to_dataset(filename,field=None):
    """
    Load xarray dataset that has been stored as a JSON file and convert
    back to a dataset

    Parameters
    ------------
    filename : str
        Full path/filename

    field : str
        optional string giving the field in the JSON file that is a Dataset

    Returns
    --------
    ds : xarray Dataset

    """
    assert os.path.exists(filename), 'Cannot find results file [%s]' % filename

    with open(filename, "r") as read_file:
        json_dict = json.load(read_file)

    try:
        if field:
            ds = xr.Dataset.from_dict(json_dict[field])
        else:
            ds = xr.Dataset.from_dict(json_dict)
    except (KeyError,ValueError,TypeError,AttributeError) as err:
        raise IntegrityError(f'Cannot load data from [{filename}]: {err}') from err

    return ds

# -----------------------------------------------------------------------------
def points_to_text(points):
    """
    Point file contents for a PointSet

    >>> print(points_to_text(PointSet([[1,0],[0,1]],'sphere')))
    2 2 sphere
    1 0
    0 1
    <BLANKLINE>
    """
    lines = [f'{points.n} {points.d} {points.mode}']
    for row in points.points:
        lines.append(' '.join(POINT_FORMAT % v for v in row))
    return '\n'.join(lines) + '\n'


def points_from_text(text,source='<text>'):
    """
    Parse point file contents

    Parameters
    ----------
    text : str
    source : str, optional
        name used in error messages

    Returns
    -------
    PointSet

    Raises
    ------
    IntegrityError
        malformed header or point lines, with the line number
    PreconditionError
        points that break the mode's norm constraints
    """
    rows = []
    header = None

    for line_no,line in enumerate(text.splitlines(),start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue

        fields = stripped.split()
        if header is None:
            if len(fields)!=3:
                raise IntegrityError(f'{source}:{line_no}: header must be "n d mode" not [{stripped}]')
            try:
                n,d = int(fields[0]),int(fields[1])
            except ValueError:
                raise IntegrityError(f'{source}:{line_no}: n and d must be integers [{stripped}]') from None
            if fields[2] not in MODES:
                raise IntegrityError(f'{source}:{line_no}: mode must be one of {MODES} not [{fields[2]}]')
            if n<1 or d<1:
                raise IntegrityError(f'{source}:{line_no}: n and d must be positive [{stripped}]')
            header = (n,d,fields[2])
            continue

        if len(fields)!=header[1]:
            raise IntegrityError(f'{source}:{line_no}: expected {header[1]} values, found {len(fields)}')
        try:
            rows.append([float(v) for v in fields])
        except ValueError:
            raise IntegrityError(f'{source}:{line_no}: cannot parse a number in [{stripped}]') from None

    if header is None:
        raise IntegrityError(f'{source}: no header line')
    if len(rows)!=header[0]:
        raise IntegrityError(f'{source}: header declares {header[0]} points, found {len(rows)}')

    return PointSet(np.array(rows),header[2],provenance=dict(source=str(source)))


def write_points(filename,points):
    """Write a PointSet to a point file"""
    with open(filename,'w') as fh:
        fh.write(points_to_text(points))
    log(f'Wrote {points.n} points to [{filename}]')


def read_points(filename):
    """Read a PointSet from a point file"""
    with open(filename,'r') as fh:
        return points_from_text(fh.read(),source=filename)

# -----------------------------------------------------------------------------
def plan_to_text(plan,extra=None):
    """
    One "key = value" line per plan field

    Floats are written with repr so plan_from_text gives back an equal
    plan. Derived values (N, norm bits, bit budget) and any extra entries
    follow the fields.

    Parameters
    ----------
    plan : CascadePlan
    extra : dict, optional
        additional key/value lines, e.g. the JL bit count

    Returns
    -------
    str
    """
    lines = []
    for name in PLAN_FIELDS:
        value = getattr(plan,name)
        if name=='dims':
            value = list(value)
        lines.append(f'{name} = {value!r}')
    for name in PLAN_DERIVED:
        lines.append(f'{name} = {getattr(plan,name)!r}')
    for name,value in (extra or {}).items():
        lines.append(f'{name} = {value!r}')
    return '\n'.join(lines) + '\n'


def plan_from_text(text,source='<text>'):
    """
    Parse a plan dump written by plan_to_text

    Raises
    ------
    IntegrityError
        unparsable lines, missing fields or derived values that do not
        match the plan
    """
    values = {}
    for line_no,line in enumerate(text.splitlines(),start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        key,sep,raw = stripped.partition('=')
        if not sep:
            raise IntegrityError(f'{source}:{line_no}: expected "key = value" not [{stripped}]')
        try:
            values[key.strip()] = ast.literal_eval(raw.strip())
        except (ValueError,SyntaxError):
            raise IntegrityError(f'{source}:{line_no}: cannot parse value [{raw.strip()}]') from None

    missing = [name for name in PLAN_FIELDS if name not in values]
    if missing:
        raise IntegrityError(f'{source}: plan is missing {missing}')

    try:
        plan = CascadePlan(**{name:values[name] for name in PLAN_FIELDS})
    except (AssertionError,ValueError,TypeError) as err:
        raise IntegrityError(f'{source}: invalid plan: {err}') from err

    for name in PLAN_DERIVED:
        if name in values and values[name]!=getattr(plan,name):
            raise IntegrityError(f'{source}: {name} = [{values[name]}] does not match the plan [{getattr(plan,name)}]')

    return plan

# -----------------------------------------------------------------------------
def header_size(ell):
    """Bytes before the payload"""
    return HEADER_STRUCT.size + 8*ell + NORM_STEP_STRUCT.size


def plan_storage_bits(plan):
    """
    Payload bits plus norm block bits, 8 x payload bytes + 32 n in ball mode

    Words are padded to 64 bits so this is at least plan.bit_budget less
    the norm bits.
    """
    payload_bits = 8*plan.n*words_for_bits(plan.N)*8
    if plan.mode==MODE_SPHERE:
        return payload_bits
    return payload_bits + NORM_INDEX_BITS*plan.n


def storage_bits(bundle):
    """Stored bits of a bundle, see plan_storage_bits"""
    return plan_storage_bits(bundle.plan)


def sketch_to_bytes(bundle):
    """
    Serialise a SketchBundle

    Returns
    -------
    bytes
    """
    plan = bundle.plan
    parts = [
        HEADER_STRUCT.pack(SKETCH_MAGIC,SKETCH_VERSION,MODE_CODES[plan.mode],
                           bundle.n,plan.d,plan.ell,plan.epsilon,plan.m,plan.r,plan.rho,
                           plan.master_seed),
        struct.pack(f'<{plan.ell}Q',*plan.dims),
        NORM_STEP_STRUCT.pack(plan.norm_step or 0.0),
        np.ascontiguousarray(bundle.words,dtype='<u8').tobytes(),
        ]
    if bundle.norm_indices is not None:
        parts.append(np.ascontiguousarray(bundle.norm_indices,dtype='<u4').tobytes())

    body = b''.join(parts)
    return body + CRC_STRUCT.pack(zlib.crc32(body) & 0xFFFFFFFF)


def sketch_from_bytes(data,source='<bytes>'):
    """
    Parse and check a serialised SketchBundle

    The plan read back carries only the header fields; delta,
    working_epsilon, n_constant and target are None.

    Raises
    ------
    IntegrityError
        bad magic, version, mode, length or CRC
    """
    data = bytes(data)
    if len(data) < HEADER_STRUCT.size + NORM_STEP_STRUCT.size + CRC_STRUCT.size:
        raise IntegrityError(f'{source}: file too short for a sketch header')

    body,crc_bytes = data[:-CRC_STRUCT.size],data[-CRC_STRUCT.size:]
    if CRC_STRUCT.unpack(crc_bytes)[0]!=(zlib.crc32(body) & 0xFFFFFFFF):
        raise IntegrityError(f'{source}: CRC check failed')

    (magic,version,mode_code,n,d,ell,epsilon,m,r,rho,master_seed) = HEADER_STRUCT.unpack_from(body,0)
    if magic!=SKETCH_MAGIC:
        raise IntegrityError(f'{source}: bad magic [{magic!r}]')
    if version!=SKETCH_VERSION:
        raise IntegrityError(f'{source}: unsupported version [{version}]')
    if mode_code not in CODE_MODES:
        raise IntegrityError(f'{source}: unknown mode code [{mode_code}]')
    if ell<1 or n<1:
        raise IntegrityError(f'{source}: header has n = {n}, ell = {ell}')

    mode = CODE_MODES[mode_code]
    offset = HEADER_STRUCT.size
    if len(body) < header_size(ell):
        raise IntegrityError(f'{source}: file too short for {ell} dimensions')
    dims = struct.unpack_from(f'<{ell}Q',body,offset)
    offset += 8*ell
    norm_step = NORM_STEP_STRUCT.unpack_from(body,offset)[0]
    offset += NORM_STEP_STRUCT.size

    n_words = words_for_bits(dims[-1]) if dims[-1]>0 else 0
    expected = header_size(ell) + 8*n*n_words + (4*n if mode==MODE_BALL else 0)
    if len(body)!=expected:
        raise IntegrityError(f'{source}: expected {expected + CRC_STRUCT.size} bytes, found {len(data)}')

    try:
        plan = CascadePlan(n=n,d=d,mode=mode,epsilon=epsilon,m=m,r=r,rho=rho,ell=ell,dims=dims,
                           master_seed=master_seed,
                           norm_step=norm_step if mode==MODE_BALL else None)
    except (AssertionError,ValueError) as err:
        raise IntegrityError(f'{source}: invalid header: {err}') from err

    words = np.frombuffer(body,dtype='<u8',count=n*n_words,offset=offset).astype(np.uint64)
    offset += 8*n*n_words

    norm_indices = None
    if mode==MODE_BALL:
        norm_indices = np.frombuffer(body,dtype='<u4',count=n,offset=offset).astype(np.uint32)

    try:
        return SketchBundle(plan,words.reshape(n,n_words),norm_indices)
    except ValueError as err:
        raise IntegrityError(f'{source}: {err}') from err


def write_sketch(filename,bundle):
    """Write a SketchBundle to a sketch file, returns the byte count"""
    data = sketch_to_bytes(bundle)
    with open(filename,'wb') as fh:
        fh.write(data)
    log(f'Wrote {len(data)} bytes to [{filename}]')
    return len(data)


def read_sketch(filename):
    """Read and check a sketch file"""
    with open(filename,'rb') as fh:
        return sketch_from_bytes(fh.read(),source=filename)

#================================================================
#%% Classes
#================================================================
@xr.register_dataset_accessor('save')
class StorageAccessor:
    """
    Extension class for xarray dataset to add save functions
    Adds the .save property to datasets.

    Example use
    -----------
    Save to JSON format
    >>> ds.save.to_json(filename)

    """

    def __init__(self, xarray_obj):
        self._obj = xarray_obj


    def to_json(self,filename):
        """
        Store dataset to JSON file.

        Parameters
        ----------
        filename : str
            Path to file.
        """
        dataset_to_json(filename,self._obj)


    def to_json_str(self):
        """
        Store dataset to JSON string.

        Returns
        -------
        JSON string.
        """
        return dataset_to_json_str(self._obj)


    def to_excel(self,filename):
        """
        Save dataset to excel file
        Saves each data variable to separate sheet

        Parameters
        ----------
        filename : str
            full path/filename to file location
        """
        folder = os.path.dirname(os.path.abspath(filename))
        if not os.path.exists(folder):
            raise ValueError(f'Path does not exist [{filename}]')

        with pd.ExcelWriter(filename, engine='xlsxwriter') as writer:
            for name,da in self._obj.data_vars.items():
                df = da.to_dataframe()
                df.to_excel(writer, sheet_name=name[:31])


    def to_csv(self,filename=None,dim='seed'):
        """
        Data variables along one dimension as CSV columns

        Variables with other dimensions are left out.

        Parameters
        ----------
        filename : str, optional
            file to write, otherwise the CSV text is returned
        dim : str, optional
            index dimension, by default 'seed'
        """
        names = [name for name,da in self._obj.data_vars.items() if da.dims==(dim,)]
        df = self._obj[names].to_dataframe()
        df = df[names]
        if filename is None:
            return df.to_csv()
        df.to_csv(filename)
