"""msort and sm2: stable external merge sort on one key field, and exact
grouped summation over consecutive runs of identical keys."""

import heapq
import io
import os
import sys

from .core import (
    DataError,
    UsageError,
    decimal_add,
    format_decimal,
    open_text_input,
    parse_decimal,
    parse_fieldspec,
    read_rows,
    resolve_field,
    run_tool,
    split_fields,
    text_stdout,
    wants_help,
)

DEFAULT_MEM_BYTES = 256 * 1024 * 1024
SPILL_DIR_ENV = "METERPIPE_TMPDIR"


def _key_of(spec, line, lineno):
    fields = split_fields(line)
    pos = resolve_field(spec, len(fields), lineno)
    # Compare as UTF-8 bytes so ordering is bytewise regardless of content.
    return fields[pos - 1].encode("utf-8", "surrogateescape")


def merge_sort_rows(key_spec, rows, mem_bytes=DEFAULT_MEM_BYTES, spill_dir=None):
    """Yield rows ordered by the key field, bytewise and stable.

    Runs of at most ``mem_bytes`` of line text are sorted in memory and
    spilled to temporary files; spilled runs are merged lazily, so inputs
    larger than memory are fine.
    """
    if spill_dir is None:
        spill_dir = os.environ.get(SPILL_DIR_ENV) or None
    run = []
    run_bytes = 0
    spills = []
    try:
        for lineno, line in enumerate(rows, 1):
            run.append((_key_of(key_spec, line, lineno), line))
            run_bytes += len(line)
            if run_bytes >= mem_bytes:
                spills.append(_spill(run, spill_dir))
                run = []
                run_bytes = 0
        run.sort(key=_first)
        if not spills:
            for _, line in run:
                yield line
            return
        streams = [_read_run(f, key_spec) for f in spills]
        if run:
            streams.append(iter(run))
        # heapq.merge is stable: ties go to the earlier stream, and runs
        # were spilled in input order.
        for _, line in heapq.merge(*streams, key=_first):
            yield line
    finally:
        for f in spills:
            f.close()


def _first(item):
    return item[0]


def _spill(run, spill_dir):
    import tempfile

    run.sort(key=_first)
    f = tempfile.TemporaryFile("w+b", dir=spill_dir)
    out = io.TextIOWrapper(f, encoding="utf-8", errors="surrogateescape", newline="\n")
    for _, line in run:
        out.write(line + "\n")
    out.detach()
    f.seek(0)
    return f


def _read_run(f, key_spec):
    text = io.TextIOWrapper(f, encoding="utf-8", errors="surrogateescape", newline="\n")
    for line in text:
        line = line[:-1] if line.endswith("\n") else line
        yield _key_of(key_spec, line, None), line
    text.detach()


def sum_groups(k_from, k_to, v_from, v_to, rows):
    """Collapse consecutive runs of identical key tuples into one row of
    key fields plus exact decimal sums of the value columns."""
    current = None
    totals = None
    for lineno, line in enumerate(rows, 1):
        fields = split_fields(line)
        if len(fields) < v_to:
            raise DataError(
                f"line {lineno}: row has {len(fields)} fields, need {v_to}"
            )
        key = tuple(fields[k_from - 1 : k_to])
        values = [parse_decimal(tok, lineno) for tok in fields[v_from - 1 : v_to]]
        if key == current:
            totals = [decimal_add(t, v) for t, v in zip(totals, values)]
        else:
            if current is not None:
                yield _group_row(current, totals)
            current = key
            totals = values
    if current is not None:
        yield _group_row(current, totals)


def _group_row(key, totals):
    return " ".join(list(key) + [format_decimal(t) for t in totals])


# --- CLI wrappers -----------------------------------------------------------


def msort_main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    usage = "usage: msort key=<spec> [--mem <bytes>] [file]"
    if wants_help(argv):
        print(usage)
        return 0

    def body():
        rest = list(argv)
        if not rest or not rest[0].startswith("key="):
            raise UsageError(f"expected key=<spec>\n{usage}")
        key_spec = parse_fieldspec(rest[0][4:])
        rest = rest[1:]
        mem = DEFAULT_MEM_BYTES
        if rest and rest[0] == "--mem":
            if len(rest) < 2:
                raise UsageError(f"--mem needs a value\n{usage}")
            rest, raw = rest[2:], rest[1]
            try:
                mem = int(raw)
            except ValueError:
                raise UsageError(f"bad --mem value {raw!r}") from None
            if mem < 1:
                raise UsageError("--mem must be positive")
        if len(rest) > 1:
            raise UsageError(usage)
        path = rest[0] if rest else "-"
        out = text_stdout()
        with open_text_input(path) as stream:
            try:
                for line in merge_sort_rows(key_spec, read_rows(stream), mem):
                    out.write(line + "\n")
            finally:
                out.flush()

    return run_tool("msort", body)


def sm2_main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    usage = "usage: sm2 <k_from> <k_to> <v_from> <v_to> [file]"
    if wants_help(argv):
        print(usage)
        return 0

    def body():
        if len(argv) < 4 or len(argv) > 5:
            raise UsageError(usage)
        try:
            k_from, k_to, v_from, v_to = (int(a) for a in argv[:4])
        except ValueError:
            raise UsageError(f"field positions must be integers\n{usage}") from None
        if not (1 <= k_from <= k_to < v_from <= v_to):
            raise UsageError(
                "field ranges must satisfy 1 <= k_from <= k_to < v_from <= v_to"
            )
        path = argv[4] if len(argv) == 5 else "-"
        out = text_stdout()
        with open_text_input(path) as stream:
            try:
                for line in sum_groups(k_from, k_to, v_from, v_to, read_rows(stream)):
                    out.write(line + "\n")
            finally:
                out.flush()

    return run_tool("sm2", body)


if __name__ == "__main__":
    sys.exit(msort_main())
