"""Matrix Market exchange-format reading and writing.

Reading accepts coordinate and array files with real, complex, or integer
fields and general or symmetric storage, densified into a double-double
matrix.  Decimal values are parsed exactly (no intermediate binary64
rounding), so files produced by write_matrix_market round-trip bit for
bit.  Writing always emits the dense array format with general symmetry:
36 significant digits per component for double-double input, 17 for
binary64 input.
"""

import numpy as np

from .dd import DDReal
from .ddmatrix import DDMatrix

_FORMATS = ("coordinate", "array")
_FIELDS = ("real", "complex", "integer")
_SYMMETRIES = ("general", "symmetric")


class MatrixMarketError(ValueError):
    """Malformed Matrix Market content: header, sizes, indices, or values."""


def _parse_header(line):
    parts = line.split()
    if len(parts) != 5 or parts[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("not a Matrix Market header: %r" % line.strip())
    obj, fmt, field, symmetry = (p.lower() for p in parts[1:])
    if obj != "matrix":
        raise MatrixMarketError("unsupported object %r" % obj)
    if fmt not in _FORMATS:
        raise MatrixMarketError("unsupported format %r" % fmt)
    if field not in _FIELDS:
        raise MatrixMarketError("unsupported field %r" % field)
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError("unsupported symmetry %r" % symmetry)
    return fmt, field, symmetry


def _parse_value(tok):
    try:
        return DDReal.from_string(tok)
    except (ValueError, ArithmeticError):
        raise MatrixMarketError("bad numeric value %r" % tok)


def _parse_index(tok):
    try:
        return int(tok)
    except ValueError:
        raise MatrixMarketError("bad index %r" % tok)


def _set_entry(m, i, j, re, im):
    m.re_hi[i, j] = re.hi
    m.re_lo[i, j] = re.lo
    m.im_hi[i, j] = im.hi
    m.im_lo[i, j] = im.lo


def _read_coordinate(size_tokens, lines, field, symmetry):
    if len(size_tokens) != 3:
        raise MatrixMarketError("coordinate size line needs rows cols nnz")
    rows, cols, nnz = (_parse_index(t) for t in size_tokens)
    if rows < 1 or cols < 1 or nnz < 0:
        raise MatrixMarketError("bad coordinate sizes %d %d %d" % (rows, cols, nnz))
    if symmetry == "symmetric" and rows != cols:
        raise MatrixMarketError("symmetric matrix must be square")
    if len(lines) != nnz:
        raise MatrixMarketError(
            "entry count %d does not match header nnz %d" % (len(lines), nnz)
        )
    width = 4 if field == "complex" else 3
    m = DDMatrix.zeros(rows, cols)
    seen = set()
    zero = DDReal()
    for ln in lines:
        toks = ln.split()
        if len(toks) != width:
            raise MatrixMarketError("malformed entry line %r" % ln)
        i = _parse_index(toks[0]) - 1
        j = _parse_index(toks[1]) - 1
        if not (0 <= i < rows and 0 <= j < cols):
            raise MatrixMarketError(
                "index (%d, %d) outside %d x %d" % (i + 1, j + 1, rows, cols)
            )
        if (i, j) in seen:
            raise MatrixMarketError("duplicate entry (%d, %d)" % (i + 1, j + 1))
        seen.add((i, j))
        if symmetry == "symmetric" and i < j:
            raise MatrixMarketError(
                "symmetric file stores upper-triangle entry (%d, %d)"
                % (i + 1, j + 1)
            )
        re = _parse_value(toks[2])
        im = _parse_value(toks[3]) if field == "complex" else zero
        _set_entry(m, i, j, re, im)
        if symmetry == "symmetric" and i != j:
            _set_entry(m, j, i, re, im)
    return m


def _read_array(size_tokens, lines, field, symmetry):
    if len(size_tokens) != 2:
        raise MatrixMarketError("array size line needs rows cols")
    rows, cols = (_parse_index(t) for t in size_tokens)
    if rows < 1 or cols < 1:
        raise MatrixMarketError("bad array sizes %d %d" % (rows, cols))
    if symmetry == "symmetric" and rows != cols:
        raise MatrixMarketError("symmetric matrix must be square")
    if symmetry == "symmetric":
        positions = [(i, j) for j in range(cols) for i in range(j, rows)]
    else:
        positions = [(i, j) for j in range(cols) for i in range(rows)]
    if len(lines) != len(positions):
        raise MatrixMarketError(
            "value count %d does not match shape (%d values expected)"
            % (len(lines), len(positions))
        )
    width = 2 if field == "complex" else 1
    m = DDMatrix.zeros(rows, cols)
    zero = DDReal()
    for (i, j), ln in zip(positions, lines):
        toks = ln.split()
        if len(toks) != width:
            raise MatrixMarketError("malformed value line %r" % ln)
        re = _parse_value(toks[0])
        im = _parse_value(toks[1]) if field == "complex" else zero
        _set_entry(m, i, j, re, im)
        if symmetry == "symmetric" and i != j:
            _set_entry(m, j, i, re, im)
    return m


def read_matrix_market(path):
    """Read a Matrix Market file into a double-double dense matrix.

    Coordinate entries are densified (unstated entries are zero), symmetric
    storage is mirrored, integer and real values become exact pairs.
    Duplicate coordinate entries and out-of-range indices are rejected.
    """
    with open(path, "r", encoding="ascii") as f:
        raw = f.readlines()
    if not raw:
        raise MatrixMarketError("empty file")
    fmt, field, symmetry = _parse_header(raw[0])
    data = [ln for ln in raw[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not data:
        raise MatrixMarketError("missing size line")
    size_tokens = data[0].split()
    if fmt == "coordinate":
        return _read_coordinate(size_tokens, data[1:], field, symmetry)
    return _read_array(size_tokens, data[1:], field, symmetry)


def header_metadata(path):
    """Header facts without densifying: (format, field, symmetry, sizes).

    sizes is (rows, cols, nnz) for coordinate files and (rows, cols) for
    array files.
    """
    with open(path, "r", encoding="ascii") as f:
        raw = f.readlines()
    if not raw:
        raise MatrixMarketError("empty file")
    fmt, field, symmetry = _parse_header(raw[0])
    for ln in raw[1:]:
        if ln.strip() and not ln.lstrip().startswith("%"):
            toks = ln.split()
            want = 3 if fmt == "coordinate" else 2
            if len(toks) != want:
                raise MatrixMarketError("malformed size line %r" % ln)
            return fmt, field, symmetry, tuple(_parse_index(t) for t in toks)
    raise MatrixMarketError("missing size line")


def write_matrix_market(path, m, comment=None):
    """Write a matrix as a dense array-format general file.

    Double-double input is rendered at 36 significant digits per component
    (round-trip exact at pair precision), binary64 at 17.  The field is
    complex when any imaginary part is nonzero, real otherwise.
    """
    if isinstance(m, DDMatrix):
        rows, cols = m.shape
        complex_field = bool(np.any(m.im_hi != 0.0) or np.any(m.im_lo != 0.0))

        def render(i, j):
            v = m[i, j]
            if complex_field:
                return "%s %s" % (v.re.to_string(36), v.im.to_string(36))
            return v.re.to_string(36)
    else:
        arr = np.asarray(m)
        if arr.ndim != 2:
            raise MatrixMarketError("need a 2-d matrix")
        rows, cols = arr.shape
        complex_field = bool(np.iscomplexobj(arr) and np.any(arr.imag != 0.0))

        def render(i, j):
            v = complex(arr[i, j])
            if complex_field:
                return "%.16e %.16e" % (v.real, v.imag)
            return "%.16e" % v.real
    field = "complex" if complex_field else "real"
    lines = ["%%%%MatrixMarket matrix array %s general" % field]
    if comment:
        for c in str(comment).splitlines():
            lines.append("%% %s" % c)
    lines.append("%d %d" % (rows, cols))
    for j in range(cols):
        for i in range(rows):
            lines.append(render(i, j))
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")
