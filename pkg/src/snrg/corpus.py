"""Aligned (sentence, graph, alignment) corpus ingestion and length filter.

Record format, blank-line separated:

    # ::snt the boy wants to go
    # ::alignments 0-2|0.0 2-3|0 4-5|0.1
    (w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))

A link "i-j|addr" aligns the token span [i, j) to the node at the
root-relative address: "0" is the root, "0.k" its k-th child in source
order, and so on.  The ::alignments line is optional.  Other "#" lines
are comments.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .graph import AmrGraph, PenmanParseError, is_comment_line, parse_penman

log = logging.getLogger(__name__)

_LINK_RE = re.compile(r"(\d+)-(\d+)\|([0-9.]+)\Z")


class CorpusFormatError(ValueError):
    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Instance:
    """One training/dev/test example."""

    tokens: tuple[str, ...]
    graph: AmrGraph
    alignment: frozenset[tuple[int, int, int]] = field(default_factory=frozenset)
    # each link is (span start, span end, node id), 0 <= start < end <= |tokens|

    def __post_init__(self):
        for i, j, v in self.alignment:
            if not 0 <= i < j <= len(self.tokens):
                raise ValueError(f"span [{i}, {j}) out of range")
            if not 0 <= v < self.graph.n_nodes:
                raise ValueError(f"aligned node {v} not in graph")

    def aligned_nodes(self) -> set[int]:
        return {v for _, _, v in self.alignment}

    def node_positions(self) -> dict[int, int]:
        """Earliest aligned token position per node."""
        pos: dict[int, int] = {}
        for i, _, v in self.alignment:
            if v not in pos or i < pos[v]:
                pos[v] = i
        return pos


def node_addresses(g: AmrGraph) -> dict[str, int]:
    """Root-relative child-index addresses, in the graph's edge order.

    Re-entrant mentions get their own address pointing at the shared node.
    """
    out: dict[int, list[int]] = {}
    for ei, (s, _, t) in enumerate(g.edges):
        out.setdefault(s, []).append(t)
    addresses: dict[str, int] = {}
    expanded: set[int] = set()

    def walk(v: int, addr: str):
        addresses[addr] = v
        if v in expanded:
            return
        expanded.add(v)
        for k, child in enumerate(out.get(v, ())):
            walk(child, f"{addr}.{k}")

    walk(g.root, "0")
    return addresses


def load_corpus(path, strict: bool = True) -> list[Instance]:
    """Read instances from a corpus file.

    In strict mode malformed records raise CorpusFormatError; otherwise
    they are logged with their line number and skipped.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    instances: list[Instance] = []
    record: list[tuple[int, str]] = []

    def flush():
        if not record:
            return
        start_line = record[0][0]
        try:
            instances.append(_parse_record(record))
        except (CorpusFormatError, PenmanParseError, ValueError) as exc:
            if strict:
                if isinstance(exc, CorpusFormatError):
                    raise
                raise CorpusFormatError(str(exc), start_line) from exc
            log.warning("skipping record at line %d: %s", start_line, exc)
        record.clear()

    for no, line in enumerate(lines, start=1):
        if line.strip() == "":
            flush()
        else:
            record.append((no, line))
    flush()
    return instances


def _parse_record(record: list[tuple[int, str]]) -> Instance:
    snt = None
    links_text = None
    links_line = record[0][0]
    graph_lines = []
    for no, line in record:
        s = line.strip()
        if s.startswith("# ::snt"):
            snt = s[len("# ::snt"):].strip()
        elif s.startswith("# ::alignments"):
            links_text = s[len("# ::alignments"):].strip()
            links_line = no
        elif is_comment_line(line):
            continue
        else:
            graph_lines.append(line)
    if snt is None:
        raise CorpusFormatError("missing '# ::snt' line", record[0][0])
    if not graph_lines:
        raise CorpusFormatError("missing PENMAN block", record[-1][0])

    tokens = tuple(snt.split())
    graph = parse_penman("\n".join(graph_lines))
    addresses = node_addresses(graph)

    links = set()
    if links_text:
        for item in links_text.split():
            m = _LINK_RE.match(item)
            if m is None:
                raise CorpusFormatError(f"bad alignment link {item!r}", links_line)
            i, j, addr = int(m.group(1)), int(m.group(2)), m.group(3)
            if addr not in addresses:
                raise CorpusFormatError(
                    f"unresolvable node address {addr!r}", links_line)
            if not 0 <= i < j <= len(tokens):
                raise CorpusFormatError(
                    f"span {i}-{j} out of range for {len(tokens)} tokens",
                    links_line)
            links.add((i, j, addresses[addr]))
    return Instance(tokens, graph, frozenset(links))


def filter_by_length(instances: list[Instance],
                     max_tokens: int = 30) -> list[Instance]:
    """Keep instances with at most max_tokens tokens, preserving order."""
    return [inst for inst in instances if len(inst.tokens) <= max_tokens]
