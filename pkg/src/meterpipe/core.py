"""Shared record/field model, exact decimal values, and the CLI contract.

Every tool in the suite reads whitespace-separated text rows from named
files or stdin, writes rows to stdout and diagnostics to stderr, and
exits 0 on success, 1 on usage errors, 2 on data errors.

Tools run as many short-lived processes per pipeline, so this module and
the tool modules stay deliberately light to import: no argparse, no
dataclasses.
"""

import io
import re
import sys

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    """Bad invocation: unknown flag, malformed field spec, missing file."""

    exit_code = EXIT_USAGE


class DataError(Exception):
    """Malformed input data: the stream cannot be processed further."""

    exit_code = EXIT_DATA


_FIELD_SEP = re.compile(r"[ \t]+")


def split_fields(line):
    """Split a line into fields on runs of ASCII space and tab."""
    return [tok for tok in _FIELD_SEP.split(line) if tok]


class Record:
    """One text row: the raw line plus its whitespace-separated fields."""

    __slots__ = ("raw_line", "fields")

    def __init__(self, raw_line, fields):
        self.raw_line = raw_line
        self.fields = fields

    def __eq__(self, other):
        return (
            isinstance(other, Record)
            and self.raw_line == other.raw_line
            and self.fields == other.fields
        )

    def __repr__(self):
        return f"Record({self.raw_line!r}, {self.fields!r})"


def split_record(line):
    """Build a Record from one line (no trailing newline)."""
    return Record(line, tuple(split_fields(line)))


ABSOLUTE = "absolute"
END_RELATIVE = "end_relative"

_SPEC_RE = re.compile(r"^(?:([0-9]+)|NF(?:-([0-9]+))?)$")


class FieldSpec:
    """A 1-based field selector: absolute index, or NF / NF-k from the end."""

    __slots__ = ("kind", "index")

    def __init__(self, kind, index):
        self.kind = kind
        self.index = index

    def __eq__(self, other):
        return (
            isinstance(other, FieldSpec)
            and self.kind == other.kind
            and self.index == other.index
        )

    def __hash__(self):
        return hash((self.kind, self.index))

    def __str__(self):
        if self.kind == ABSOLUTE:
            return str(self.index)
        return "NF" if self.index == 0 else f"NF-{self.index}"

    def __repr__(self):
        return f"FieldSpec({self.kind!r}, {self.index!r})"


def parse_fieldspec(text):
    """Parse an integer, ``NF`` or ``NF-<k>`` selector."""
    m = _SPEC_RE.match(text)
    if m is None:
        raise UsageError(f"invalid field spec {text!r} (expected N, NF or NF-k)")
    if m.group(1) is not None:
        index = int(m.group(1))
        if index < 1:
            raise UsageError(f"invalid field spec {text!r}: index must be >= 1")
        return FieldSpec(ABSOLUTE, index)
    back = int(m.group(2)) if m.group(2) is not None else 0
    return FieldSpec(END_RELATIVE, back)


def resolve_field(spec, nfields, lineno=None):
    """Return the 1-based position selected by ``spec`` in a row of
    ``nfields`` fields, or raise a DataError naming the line."""
    if spec.kind == ABSOLUTE:
        pos = spec.index
    else:
        pos = nfields - spec.index
    if pos < 1 or pos > nfields:
        where = "" if lineno is None else f"line {lineno}: "
        raise DataError(
            f"{where}field {spec} does not exist in a {nfields}-field row"
        )
    return pos


_DECIMAL_RE = re.compile(r"^([+-]?)([0-9]+)(?:\.([0-9]+))?$")


class DecimalValue:
    """Exact base-10 fixed point: sign, integer magnitude, fractional digits.

    Addition and multiplication are exact; no rounding ever occurs, and
    the input scale (trailing zeros included) survives formatting.
    """

    __slots__ = ("negative", "digits", "scale")

    def __init__(self, negative, digits, scale):
        self.negative = negative
        self.digits = digits
        self.scale = scale

    def __eq__(self, other):
        return (
            isinstance(other, DecimalValue)
            and self.negative == other.negative
            and self.digits == other.digits
            and self.scale == other.scale
        )

    def __hash__(self):
        return hash((self.negative, self.digits, self.scale))

    def __str__(self):
        return format_decimal(self)

    def __repr__(self):
        return f"DecimalValue({self.negative!r}, {self.digits!r}, {self.scale!r})"


def parse_decimal(token, lineno=None):
    """Parse a signed decimal token into an exact DecimalValue."""
    m = _DECIMAL_RE.match(token)
    if m is None:
        where = "" if lineno is None else f"line {lineno}: "
        raise DataError(f"{where}malformed decimal value {token!r}")
    sign, intpart, fracpart = m.groups()
    frac = fracpart or ""
    return DecimalValue(
        sign == "-",
        int(intpart + frac) if frac else int(intpart),
        len(frac),
    )


def format_decimal(value):
    """Format a DecimalValue, preserving its scale exactly."""
    sign = "-" if value.negative else ""
    if value.scale == 0:
        return sign + str(value.digits)
    text = str(value.digits).rjust(value.scale + 1, "0")
    return f"{sign}{text[:-value.scale]}.{text[-value.scale:]}"


def decimal_add(a, b):
    """Exact sum; the result scale is the larger of the two input scales."""
    scale = max(a.scale, b.scale)
    av = a.digits * 10 ** (scale - a.scale)
    bv = b.digits * 10 ** (scale - b.scale)
    total = (-av if a.negative else av) + (-bv if b.negative else bv)
    return DecimalValue(total < 0, abs(total), scale)


def decimal_mul(a, b):
    """Exact product; scales add."""
    digits = a.digits * b.digits
    return DecimalValue(
        (a.negative != b.negative) and digits != 0, digits, a.scale + b.scale
    )


# --- stream I/O -------------------------------------------------------------

# Tool input/output is UTF-8 with LF row separators.  surrogateescape keeps
# arbitrary bytes round-tripping so pass-through streams stay verbatim.
_TEXT_KW = dict(encoding="utf-8", errors="surrogateescape", newline="\n")


def open_text_input(path):
    """Open a named file, or stdin for ``-``/None, as a UTF-8 text stream."""
    if path is None or path == "-":
        return io.TextIOWrapper(sys.stdin.buffer, **_TEXT_KW)
    try:
        return open(path, "r", **_TEXT_KW)
    except OSError as exc:
        raise UsageError(f"cannot open {path}: {exc.strerror}") from exc


def text_stdout():
    return io.TextIOWrapper(sys.stdout.buffer, write_through=False, **_TEXT_KW)


def read_rows(stream):
    """Yield lines without the trailing LF; a single trailing CR is dropped."""
    for line in stream:
        if line.endswith("\n"):
            line = line[:-1]
        if line.endswith("\r"):
            line = line[:-1]
        yield line


def wants_help(argv):
    return any(arg in ("-h", "--help") for arg in argv)


def run_tool(prog, body):
    """Run a tool body under the uniform CLI contract and return an exit code."""
    try:
        body()
    except UsageError as exc:
        print(f"{prog}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"{prog}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BrokenPipeError:
        # Downstream closed early; die quietly like any pipeline filter.
        try:
            sys.stdout.close()
        except OSError:
            pass
        return EXIT_OK
    return EXIT_OK
