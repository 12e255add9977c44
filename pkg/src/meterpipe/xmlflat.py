"""xmldir: flatten a stream of XML documents into path-prefixed text rows.

For every element whose root path matches the requested absolute path,
each text-only descendant element becomes one row (path components then
the text) and each attribute becomes one row (path components including
the owning element, then the attribute name and value).  Rows come out
in document order.

The input may be any number of well-formed documents back to back, as
produced by concatenating files; parser state resets at each new root.
"""

import sys
from xml.parsers import expat

from .core import DataError, UsageError, run_tool, text_stdout, wants_help

_CHUNK_SIZE = 64 * 1024

# Error codes that mark the start of the next concatenated document once a
# root element has closed: raw junk, or a fresh <?xml ...?> declaration.
_BOUNDARY_CODES = frozenset(
    expat.errors.codes[msg]
    for msg in (
        expat.errors.XML_ERROR_JUNK_AFTER_DOC_ELEMENT,
        expat.errors.XML_ERROR_MISPLACED_XML_PI,
    )
)


class _DocFlattener:
    """Expat handlers for one document; emits rows for one match subtree."""

    __slots__ = (
        "parser",
        "target",
        "emit",
        "names",
        "has_child",
        "texts",
        "match_depth",
        "started",
        "root_closed",
    )

    def __init__(self, target, emit):
        self.target = target
        self.emit = emit
        self.names = []
        self.has_child = []
        self.texts = []
        self.match_depth = None
        self.started = False
        self.root_closed = False
        parser = expat.ParserCreate()
        parser.buffer_text = True
        parser.ordered_attributes = True
        parser.StartElementHandler = self._start
        parser.EndElementHandler = self._end
        parser.CharacterDataHandler = self._chars
        self.parser = parser

    def _start(self, name, attrs):
        names = self.names
        if names:
            self.has_child[-1] = True
        else:
            self.started = True
        names.append(name)
        self.has_child.append(False)
        self.texts.append([])
        if (
            self.match_depth is None
            and len(names) == len(self.target)
            and names == self.target
        ):
            self.match_depth = len(names)
        if self.match_depth is not None and attrs:
            prefix = " ".join(names)
            emit = self.emit
            for i in range(0, len(attrs), 2):
                emit(f"{prefix} {attrs[i]} {attrs[i + 1]}")

    def _chars(self, data):
        if self.match_depth is not None:
            self.texts[-1].append(data)

    def _end(self, name):
        names = self.names
        if self.match_depth is not None:
            if not self.has_child[-1]:
                text = "".join(self.texts[-1])
                if text and not text.isspace():
                    if "\n" in text or "\r" in text:
                        # Keep one row per leaf: embedded line breaks would
                        # split the record.
                        text = text.replace("\r", " ").replace("\n", " ")
                    self.emit(" ".join(names) + " " + text)
            if len(names) == self.match_depth:
                self.match_depth = None
        names.pop()
        self.has_child.pop()
        self.texts.pop()
        if not names:
            self.root_closed = True


def parse_element_path(text):
    """Parse an absolute /A/B/... element path into its components."""
    if not text.startswith("/"):
        raise UsageError(f"element path must be absolute: {text!r}")
    components = text.split("/")[1:]
    if not components or any(not c or " " in c or "\t" in c for c in components):
        raise UsageError(f"invalid element path: {text!r}")
    return components


# How far back a document boundary may reach into already-fed bytes: the
# next document's first token seen so far (at most an XML declaration).
_TAIL_KEEP = 64 * 1024


def flatten_stream(read_chunk, target, emit):
    """Drive expat over concatenated documents, emitting rows via ``emit``.

    ``read_chunk()`` returns the next byte chunk, empty at end of input.
    Raises DataError with the global byte offset on malformed XML.
    """
    doc = _DocFlattener(target, emit)
    base = 0  # global offset of the current parser's first byte
    fed = 0  # bytes fed to the current parser so far
    tail = []  # recent (start_offset, chunk) segments for boundary restarts
    carry = b""
    documents = 0
    eof = False

    while True:
        if carry:
            chunk = carry
            carry = b""
        elif not eof:
            chunk = read_chunk()
            if not chunk:
                eof = True
                continue
        else:
            try:
                doc.parser.Parse(b"", True)
            except expat.ExpatError as exc:
                if not doc.started and documents == 0:
                    raise DataError("no XML document found in input") from exc
                raise _malformed(base, doc.parser, exc) from exc
            if doc.root_closed:
                documents += 1
            elif documents == 0:
                raise DataError("no XML document found in input")
            return documents

        try:
            doc.parser.Parse(chunk, False)
        except expat.ExpatError as exc:
            err_index = doc.parser.ErrorByteIndex
            if not doc.root_closed or exc.code not in _BOUNDARY_CODES:
                raise _malformed(base, doc.parser, exc) from exc
            # Document boundary: restart a fresh parser at the junk byte.
            if err_index >= fed:
                remainder = chunk[err_index - fed :]
            else:
                remainder = _tail_slice(tail, err_index) + chunk
            documents += 1
            base += err_index
            doc = _DocFlattener(target, emit)
            fed = 0
            tail = []
            carry = remainder
            continue

        tail.append((fed, chunk))
        fed += len(chunk)
        while len(tail) > 1 and fed - tail[1][0] >= _TAIL_KEEP:
            del tail[0]


def _tail_slice(tail, err_index):
    """Bytes from err_index to the end of the retained tail segments."""
    for i, (start, segment) in enumerate(tail):
        if start <= err_index < start + len(segment):
            return segment[err_index - start :] + b"".join(
                seg for _, seg in tail[i + 1 :]
            )
    raise DataError(
        f"document boundary at byte {err_index} is beyond the retained window"
    )


def _malformed(base, parser, exc):
    offset = base + parser.ErrorByteIndex
    message = expat.errors.messages.get(exc.code, "parse error")
    return DataError(f"malformed XML at byte {offset}: {message}")


def flatten_bytes(data, path):
    """Flatten one in-memory byte stream; returns the rows as a list."""
    target = parse_element_path(path)
    rows = []
    stream = memoryview(data)
    pos = 0

    def read_chunk():
        nonlocal pos
        chunk = bytes(stream[pos : pos + _CHUNK_SIZE])
        pos += len(chunk)
        return chunk

    flatten_stream(read_chunk, target, rows.append)
    return rows


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    usage = "usage: xmldir <absolute-element-path> [file|-]"
    if wants_help(argv):
        print(usage)
        return 0

    def body():
        if not argv or len(argv) > 2:
            raise UsageError(usage)
        target = parse_element_path(argv[0])
        path = argv[1] if len(argv) == 2 else "-"
        if path == "-":
            source = sys.stdin.buffer
        else:
            try:
                source = open(path, "rb")
            except OSError as exc:
                raise UsageError(f"cannot open {path}: {exc.strerror}") from exc
        out = text_stdout()
        write = out.write
        try:
            flatten_stream(
                lambda: source.read(_CHUNK_SIZE),
                target,
                lambda row: write(row + "\n"),
            )
        finally:
            out.flush()
            if source is not sys.stdin.buffer:
                source.close()

    return run_tool("xmldir", body)


if __name__ == "__main__":
    sys.exit(main())
