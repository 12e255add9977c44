"""Row and column stream operators: self, delf, delr, filter-tags,
group-number and map (the key/label/value pivot)."""

import io
import os
import sys

from .core import (
    DataError,
    UsageError,
    open_text_input,
    parse_fieldspec,
    read_rows,
    resolve_field,
    run_tool,
    split_fields,
    text_stdout,
    wants_help,
)

DEFAULT_TAGS = ("name", "timeStamp", "value", "ref")


def select_fields(specs, rows):
    """self: keep exactly the selected fields, in spec order."""
    for lineno, line in enumerate(rows, 1):
        fields = split_fields(line)
        n = len(fields)
        yield " ".join(fields[resolve_field(s, n, lineno) - 1] for s in specs)


def delete_fields(specs, rows):
    """delf: drop the selected fields, keeping the rest in original order."""
    for lineno, line in enumerate(rows, 1):
        fields = split_fields(line)
        n = len(fields)
        drop = {resolve_field(s, n, lineno) for s in specs}
        yield " ".join(f for pos, f in enumerate(fields, 1) if pos not in drop)


def delete_rows(spec, literal, rows):
    """delr: drop rows whose selected field equals the literal exactly.

    Rows too short to resolve the spec cannot match and are kept.
    """
    for line in rows:
        fields = split_fields(line)
        n = len(fields)
        pos = spec.index if spec.kind == "absolute" else n - spec.index
        if 1 <= pos <= n and fields[pos - 1] == literal:
            continue
        yield line


def filter_tags(allowed, rows):
    """Keep rows whose first field is in the allowed tag set."""
    for line in rows:
        fields = split_fields(line)
        if fields and fields[0] in allowed:
            yield line


def group_number(rows):
    """Number reading groups and re-emit the meter name before each reading.

    Remembers the most recent ``name`` row; every ``timeStamp`` row is
    preceded by a fresh copy of it.  A counter that increments on each
    emitted ``name`` row prefixes every output row, so the meter header
    and each individual reading become separately numbered groups.
    """
    count = 0
    remembered = None
    for lineno, line in enumerate(rows, 1):
        fields = split_fields(line)
        tag = fields[0] if fields else ""
        if tag == "name":
            remembered = line
            count += 1
            yield f"{count} {line}"
        elif tag == "timeStamp":
            if remembered is None:
                raise DataError(f"line {lineno}: reading before any meter name row")
            count += 1
            yield f"{count} {remembered}"
            yield f"{count} {line}"
        else:
            yield f"{count} {line}"


MISSING_CELL = "0"


def _parse_cell(line, lineno):
    fields = split_fields(line)
    if len(fields) < 3:
        raise DataError(f"line {lineno}: pivot cell needs key, label and value")
    return fields[0], fields[1], " ".join(fields[2:])


def collect_labels(rows):
    """Pivot pass 1: the sorted union of labels, checking cell uniqueness.

    Cells of one key must be consecutive; a (key, label) pair repeated
    within its run is a data error.
    """
    labels = set()
    run_key = None
    run_labels = set()
    for lineno, line in enumerate(rows, 1):
        key, label, _ = _parse_cell(line, lineno)
        if key != run_key:
            run_key = key
            run_labels = set()
        if label in run_labels:
            raise DataError(f"line {lineno}: duplicate cell ({key}, {label})")
        run_labels.add(label)
        labels.add(label)
    return sorted(labels)


def emit_pivot(rows, ordered_labels):
    """Pivot pass 2: one wide row per consecutive key run, columns in the
    given label order, absent cells filled with "0". No header row."""
    key = None
    cells = {}
    for lineno, line in enumerate(rows, 1):
        k, label, value = _parse_cell(line, lineno)
        if k != key:
            if key is not None:
                yield _pivot_row(key, cells, ordered_labels)
            key = k
            cells = {}
        cells[label] = value
    if key is not None:
        yield _pivot_row(key, cells, ordered_labels)


def _pivot_row(key, cells, ordered_labels):
    return " ".join([key] + [cells.get(label, MISSING_CELL) for label in ordered_labels])


def pivot(cell_rows):
    """Pivot an in-memory sequence of cell rows (both passes in one call)."""
    cell_rows = list(cell_rows)
    return emit_pivot(iter(cell_rows), collect_labels(iter(cell_rows)))


# --- CLI wrappers -----------------------------------------------------------
#
# Argument grammars here are tiny and these tools start once per pipeline
# stage, so argv is parsed by hand to keep startup cheap.


def _write_all(rows, out):
    try:
        for row in rows:
            out.write(row + "\n")
    finally:
        out.flush()


def _one_optional_file(rest, usage):
    if len(rest) > 1:
        raise UsageError(f"unexpected argument {rest[1]!r}\n{usage}")
    return rest[0] if rest else "-"


def _specs_and_file(argv, usage):
    """Split argv into leading field specs and an optional trailing file."""
    specs = []
    i = 0
    while i < len(argv):
        try:
            specs.append(parse_fieldspec(argv[i]))
        except UsageError:
            break
        i += 1
    if not specs:
        raise UsageError(f"at least one field spec (N, NF or NF-k) is required\n{usage}")
    return specs, _one_optional_file(argv[i:], usage)


def _spec_tool_main(prog, transform, argv):
    argv = sys.argv[1:] if argv is None else argv
    usage = f"usage: {prog} <spec>... [file]"
    if wants_help(argv):
        print(usage)
        return 0

    def body():
        specs, path = _specs_and_file(argv, usage)
        with open_text_input(path) as stream:
            _write_all(transform(specs, read_rows(stream)), text_stdout())

    return run_tool(prog, body)


def self_main(argv=None):
    return _spec_tool_main("self", select_fields, argv)


def delf_main(argv=None):
    return _spec_tool_main("delf", delete_fields, argv)


def delr_main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    usage = "usage: delr <spec> <literal> [file]"
    if wants_help(argv):
        print(usage)
        return 0

    def body():
        if len(argv) < 2:
            raise UsageError(usage)
        spec = parse_fieldspec(argv[0])
        literal = argv[1]
        path = _one_optional_file(argv[2:], usage)
        with open_text_input(path) as stream:
            _write_all(delete_rows(spec, literal, read_rows(stream)), text_stdout())

    return run_tool("delr", body)


def filter_tags_main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    usage = "usage: filter-tags [--allow a,b,...] [file]"
    if wants_help(argv):
        print(usage)
        return 0

    def body():
        allow = ",".join(DEFAULT_TAGS)
        rest = list(argv)
        if rest and rest[0] == "--allow":
            if len(rest) < 2:
                raise UsageError(f"--allow needs a value\n{usage}")
            allow = rest[1]
            rest = rest[2:]
        elif rest and rest[0].startswith("--allow="):
            allow = rest[0].split("=", 1)[1]
            rest = rest[1:]
        allowed = frozenset(t for t in allow.split(",") if t)
        path = _one_optional_file(rest, usage)
        with open_text_input(path) as stream:
            _write_all(filter_tags(allowed, read_rows(stream)), text_stdout())

    return run_tool("filter-tags", body)


def group_number_main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    usage = "usage: group-number [file]"
    if wants_help(argv):
        print(usage)
        return 0

    def body():
        path = _one_optional_file(argv, usage)
        with open_text_input(path) as stream:
            _write_all(group_number(read_rows(stream)), text_stdout())

    return run_tool("group-number", body)


def map_main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    usage = "usage: map num=1 [file]"
    if wants_help(argv):
        print(usage)
        return 0

    def body():
        if not argv or not argv[0].startswith("num="):
            raise UsageError(f"expected num=<k>\n{usage}")
        if argv[0] != "num=1":
            raise UsageError("only num=1 is supported")
        path = _one_optional_file(argv[1:], usage)
        out = text_stdout()
        try:
            if path == "-":
                _pivot_stdin(out)
            else:
                with open_text_input(path) as one:
                    labels = collect_labels(read_rows(one))
                with open_text_input(path) as two:
                    for row in emit_pivot(read_rows(two), labels):
                        out.write(row + "\n")
        finally:
            out.flush()

    return run_tool("map", body)


def _pivot_stdin(out):
    # Two passes are needed for the global label set; spool the pipe first.
    import tempfile

    spool_dir = os.environ.get("METERPIPE_TMPDIR") or None
    with tempfile.TemporaryFile("w+b", dir=spool_dir) as spool:
        while True:
            chunk = sys.stdin.buffer.read(64 * 1024)
            if not chunk:
                break
            spool.write(chunk)
        spool.seek(0)
        labels = collect_labels(read_rows(_text_view(spool)))
        spool.seek(0)
        for row in emit_pivot(read_rows(_text_view(spool)), labels):
            out.write(row + "\n")


def _text_view(binary):
    """A text iterator over a binary file that leaves the file open."""
    wrapper = io.TextIOWrapper(
        binary, encoding="utf-8", errors="surrogateescape", newline="\n"
    )
    try:
        yield from wrapper
    finally:
        wrapper.detach()
