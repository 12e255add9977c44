"""cjoin1: hash-join a transaction stream against an in-memory master file.

Matching rows gain the master payload right after the key field and go to
stdout; non-matching rows pass through verbatim to a reject target (a file
path or an inherited file descriptor, mirroring shell ``3>`` redirection).
"""

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


class MasterIndex:
    """Key to payload map loaded from a master file (field 1 is the key)."""

    __slots__ = ("entries", "payload_width")

    def __init__(self, entries, payload_width):
        self.entries = entries
        self.payload_width = payload_width


def load_master(rows):
    """Build a MasterIndex; keys must be unique and payload widths uniform."""
    entries = {}
    width = None
    for lineno, line in enumerate(rows, 1):
        fields = split_fields(line)
        if len(fields) < 2:
            raise DataError(f"master line {lineno}: need a key and a payload")
        key, payload = fields[0], fields[1:]
        if key in entries:
            raise DataError(f"master line {lineno}: duplicate key {key!r}")
        if width is None:
            width = len(payload)
        elif len(payload) != width:
            raise DataError(
                f"master line {lineno}: payload width {len(payload)} != {width}"
            )
        entries[key] = payload
    return MasterIndex(entries=entries, payload_width=width or 0)


def hash_join(key_spec, master, rows):
    """Yield (matched, output_line) pairs in input order.

    Matched rows are re-joined fields with the payload spliced in after
    the key; unmatched rows are the original line, untouched.
    """
    entries = master.entries
    for lineno, line in enumerate(rows, 1):
        fields = split_fields(line)
        pos = resolve_field(key_spec, len(fields), lineno)
        payload = entries.get(fields[pos - 1])
        if payload is None:
            yield False, line
        else:
            yield True, " ".join(fields[:pos] + payload + fields[pos:])


def _open_reject(target):
    if target is None:
        return None
    if target.startswith("&"):
        try:
            fd = int(target[1:])
        except ValueError:
            raise UsageError(f"bad reject target {target!r}: expected &N or a path")
        try:
            return os.fdopen(
                fd, "w", encoding="utf-8", errors="surrogateescape", newline="\n"
            )
        except OSError as exc:
            raise UsageError(f"reject descriptor {fd} is not open: {exc}") from exc
    try:
        return open(target, "w", encoding="utf-8", errors="surrogateescape", newline="\n")
    except OSError as exc:
        raise UsageError(f"cannot open reject file {target}: {exc.strerror}") from exc


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    usage = "usage: cjoin1 [--reject <path|&N>] key=<spec> <masterfile> [txnfile|-]"
    if wants_help(argv):
        print(usage)
        return 0

    def body():
        rest = list(argv)
        reject_target = None
        if rest and rest[0] == "--reject":
            if len(rest) < 2:
                raise UsageError(f"--reject needs a value\n{usage}")
            reject_target = rest[1]
            rest = rest[2:]
        elif rest and rest[0].startswith("--reject="):
            reject_target = rest[0].split("=", 1)[1]
            rest = rest[1:]
        if len(rest) < 2 or len(rest) > 3:
            raise UsageError(usage)
        if not rest[0].startswith("key="):
            raise UsageError(f"expected key=<spec>, got {rest[0]!r}")
        key_spec = parse_fieldspec(rest[0][4:])
        masterfile = rest[1]
        txnfile = rest[2] if len(rest) == 3 else "-"
        with open_text_input(masterfile) as mf:
            master = load_master(read_rows(mf))
        reject = _open_reject(reject_target)
        out = text_stdout()
        dropped = 0
        try:
            with open_text_input(txnfile) as txn:
                for matched, line in hash_join(key_spec, master, read_rows(txn)):
                    if matched:
                        out.write(line + "\n")
                    elif reject is not None:
                        reject.write(line + "\n")
                    else:
                        dropped += 1
        finally:
            out.flush()
            if reject is not None:
                reject.close()
        if dropped:
            print(
                f"cjoin1: warning: {dropped} unmatched row(s) discarded "
                "(no --reject target)",
                file=sys.stderr,
            )

    return run_tool("cjoin1", body)


if __name__ == "__main__":
    sys.exit(main())
