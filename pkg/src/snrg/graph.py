"""Rooted directed labeled graphs with PENMAN I/O, matching and collapsing.

Nodes carry either a concept label ("want-01", "boy", a quoted literal, a
number, "-") or a nonterminal marker of the form "#Xk#".  Node ids are the
indices 0..n-1 into the label tuple; re-entrancy is a node with in-degree
greater than one.  Everything here is immutable: collapsing returns a new
graph.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache

from . import matching

NT_RE = re.compile(r"#X(\d*)#\Z")

# beyond this many sibling-order candidates, canonicalization keeps the
# first ordering (still a faithful serialization, possibly not minimal)
_CANON_ENUM_CAP = 5000


class PenmanParseError(ValueError):
    """Malformed PENMAN input; carries the byte offset of the problem."""

    def __init__(self, message, pos):
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


class MatchError(ValueError):
    """A FragmentMatch that does not fit the graph it is applied to."""


def is_nonterminal(label: str) -> bool:
    return NT_RE.match(label) is not None


def nt_index(label: str) -> int:
    m = NT_RE.match(label)
    if m is None:
        raise ValueError(f"not a nonterminal marker: {label!r}")
    return int(m.group(1)) if m.group(1) else 0


def _is_constant_label(label: str) -> bool:
    # literals serialize bare: quoted strings, numbers, "-", "+"
    if label.startswith('"') and label.endswith('"') and len(label) >= 2:
        return True
    if label in ("-", "+"):
        return True
    return bool(re.match(r"-?\d+(\.\d+)?\Z", label))


@dataclass(frozen=True)
class AmrGraph:
    """Rooted directed labeled graph; doubles as a hypothesis graph.

    nodes: label per node id.  edges: (source, label, target) triples,
    stored in construction order (source order for parsed graphs).
    attachments: partial translations, only on nonterminal nodes.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[int, str, int], ...]
    root: int = 0
    attachments: dict[int, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.nodes)
        if not 0 <= self.root < n:
            raise ValueError(f"root {self.root} out of range")
        for s, _, t in self.edges:
            if not (0 <= s < n and 0 <= t < n):
                raise ValueError(f"edge endpoint out of range: ({s}, {t})")
        for v in self.attachments:
            if not is_nonterminal(self.nodes[v]):
                raise ValueError(f"attachment on terminal node {v}")
        if self._reachable_from_root() != set(range(n)):
            raise ValueError("not all nodes reachable from root")

    def _reachable_from_root(self) -> set[int]:
        seen = {self.root}
        stack = [self.root]
        out = {}
        for s, _, t in self.edges:
            out.setdefault(s, []).append(t)
        while stack:
            v = stack.pop()
            for w in out.get(v, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def terminal_nodes(self) -> list[int]:
        return [v for v, lab in enumerate(self.nodes) if not is_nonterminal(lab)]

    def nonterminal_nodes(self) -> list[int]:
        return [v for v, lab in enumerate(self.nodes) if is_nonterminal(lab)]

    def out_edges(self, v: int) -> list[tuple[int, tuple[int, str, int]]]:
        return [(i, e) for i, e in enumerate(self.edges) if e[0] == v]

    def edge_labels(self) -> set[str]:
        return {lab for _, lab, _ in self.edges}

    def max_nt_index(self) -> int:
        idx = 0
        for lab in self.nodes:
            if is_nonterminal(lab):
                idx = max(idx, nt_index(lab))
        return idx

    # matching kernels consume an integer-encoded view, built once per graph
    def _index(self) -> matching.GraphIndex:
        cached = object.__getattribute__(self, "__dict__").get("_gidx")
        if cached is None:
            cached = matching.GraphIndex(self.nodes, self.edges,
                                         [is_nonterminal(l) for l in self.nodes])
            object.__getattribute__(self, "__dict__")["_gidx"] = cached
        return cached


class AmrFragment(AmrGraph):
    """Rooted connected fragment used as a rule's source side."""

    def __post_init__(self):
        super().__post_init__()
        # rooted reachability (checked above) implies connectedness

    def _pattern(self) -> matching.FragmentPattern:
        cached = object.__getattribute__(self, "__dict__").get("_fpat")
        if cached is None:
            cached = matching.FragmentPattern(
                self.nodes, self.edges, self.root,
                [is_nonterminal(l) for l in self.nodes])
            object.__getattribute__(self, "__dict__")["_fpat"] = cached
        return cached


@dataclass(frozen=True)
class FragmentMatch:
    """An injective label-preserving embedding of a fragment in a graph."""

    binding: dict[int, int]          # fragment node id -> graph node id
    matched_edges: frozenset[int]    # graph edge indices
    root_image: int

    def _key(self):
        return (self.root_image, tuple(sorted(self.binding.items())),
                tuple(sorted(self.matched_edges)))


def parse_penman(text: str) -> AmrGraph:
    """Parse one PENMAN expression into a graph.

    Re-used variables become re-entrant edges; inverse roles like
    ":ARG0-of" are kept verbatim; bare tokens that are not variables
    become constant-labeled leaf nodes.  Lines whose first non-blank
    character is "#" are comments (nonterminal markers "#Xk#" excepted).
    """
    src = strip_comments(text)
    toks = _tokenize(src)
    if not toks:
        raise PenmanParseError("empty input", 0)

    # first pass: variables are the tokens directly preceding a "/"
    variables = set()
    for i in range(len(toks) - 2):
        if toks[i][0] == "(" and toks[i + 2][0] == "/":
            variables.add(toks[i + 1][0])

    labels: list[str] = []
    edges: list[tuple[int, str, int]] = []
    var_to_node: dict[str, int] = {}
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else (None, len(src))

    def take(expect=None):
        nonlocal pos
        tok, off = peek()
        if tok is None:
            raise PenmanParseError("unexpected end of input", off)
        if expect is not None and tok != expect:
            raise PenmanParseError(f"expected {expect!r}, found {tok!r}", off)
        pos += 1
        return tok, off

    def parse_node() -> int:
        nonlocal pos
        take("(")
        var, off = take()
        if var in ("(", ")", "/") or var.startswith(":"):
            raise PenmanParseError(f"expected variable, found {var!r}", off)
        take("/")
        concept, coff = take()
        if concept in ("(", ")", "/") or concept.startswith(":"):
            raise PenmanParseError("missing concept after '/'", coff)
        if var in var_to_node:
            raise PenmanParseError(f"duplicate definition of variable {var!r}", off)
        nid = len(labels)
        labels.append(concept)
        var_to_node[var] = nid
        while True:
            tok, toff = peek()
            if tok is None:
                raise PenmanParseError("unbalanced parentheses", toff)
            if tok == ")":
                take()
                return nid
            if not tok.startswith(":") or len(tok) < 2:
                raise PenmanParseError(f"expected role or ')', found {tok!r}", toff)
            role = take()[0][1:]
            tok, toff = peek()
            if tok == "(":
                child = parse_node()
            elif tok is None or tok in (")", "/") or tok.startswith(":"):
                raise PenmanParseError(f"missing value for role :{role}", toff)
            elif tok in variables:
                take()
                if tok not in var_to_node:
                    raise PenmanParseError(
                        f"variable {tok!r} referenced before definition", toff)
                child = var_to_node[tok]
            else:
                take()
                child = len(labels)
                labels.append(tok)
            edges.append((nid, role, child))

    root = parse_node()
    tok, off = peek()
    if tok is not None:
        raise PenmanParseError(f"trailing input {tok!r}", off)
    return AmrGraph(tuple(labels), tuple(edges), root)


def parse_fragment(text: str) -> AmrFragment:
    g = parse_penman(text)
    return AmrFragment(g.nodes, g.edges, g.root)


def is_comment_line(line: str) -> bool:
    """Comment lines start with '#'; nonterminal markers '#Xk#' do not
    count (they share the sigil)."""
    s = line.lstrip()
    if not s.startswith("#"):
        return False
    end = s.find("#", 1)
    return not (end > 0 and NT_RE.match(s[:end + 1]))


def strip_comments(text: str) -> str:
    return "\n".join(line for line in text.splitlines()
                     if not is_comment_line(line))


def _tokenize(src: str) -> list[tuple[str, int]]:
    toks = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
        elif c in "()/":
            toks.append((c, i))
            i += 1
        elif c == '"':
            j = src.find('"', i + 1)
            if j < 0:
                raise PenmanParseError("unterminated string literal", i)
            toks.append((src[i:j + 1], i))
            i = j + 1
        else:
            j = i
            while j < n and not src[j].isspace() and src[j] not in '()"':
                # "/" is structural only between variable and concept; it can
                # occur inside tokens such as dates, but AMR never does that,
                # so treat it as a delimiter
                if src[j] == "/":
                    break
                j += 1
            toks.append((src[i:j], i))
            i = j
    return toks


def serialize_penman(g: AmrGraph) -> str:
    """Single-line PENMAN; re-entrant nodes print once, then by variable."""
    out: dict[int, list[tuple[str, int]]] = {v: [] for v in range(g.n_nodes)}
    indeg = [0] * g.n_nodes
    for s, lab, t in g.edges:
        out[s].append((lab, t))
        indeg[t] += 1

    names: dict[int, str] = {}
    used: set[str] = set()

    def name_for(v: int) -> str:
        if v in names:
            return names[v]
        lab = g.nodes[v]
        m = NT_RE.match(lab)
        if m:
            base = "X" + (m.group(1) or "")
        else:
            first = next((c.lower() for c in lab if c.isalpha()), "n")
            base = first
        cand, k = base, 2
        while cand in used:
            cand = f"{base}{k}"
            k += 1
        names[v] = cand
        used.add(cand)
        return cand

    printed: set[int] = set()

    def render(v: int) -> str:
        if v in printed:
            return name_for(v)
        lab = g.nodes[v]
        if (_is_constant_label(lab) and not out[v] and v != g.root
                and indeg[v] <= 1):
            return lab
        printed.add(v)
        parts = [f"({name_for(v)} / {lab}"]
        for elab, t in out[v]:
            parts.append(f" :{elab} {render(t)}")
        parts.append(")")
        return "".join(parts)

    return render(g.root)


def _struct_key(g: AmrGraph, v: int, path: frozenset[int]):
    """Order-invariant structural signature; re-entrant back-edges become '*'."""
    lab = g.nodes[v]
    norm = "#X#" if is_nonterminal(lab) else lab
    kids = []
    for s, elab, t in g.edges:
        if s != v:
            continue
        if t in path:
            kids.append((elab, "*"))
        else:
            kids.append((elab, _struct_key(g, t, path | {t})))
    return (norm, tuple(sorted(kids, key=repr)))


def _canon_serializations(g: AmrGraph):
    """Yield candidate canonical serializations (strings) of a fragment.

    Sibling edges are ordered by (edge label, structural key); groups that
    tie are permuted so the minimum over all yielded strings is invariant
    under node renumbering.  Also yields, per string, the nonterminal
    renumbering map {node id -> new #Xk# index}.
    """
    out: dict[int, list[tuple[str, int]]] = {v: [] for v in range(g.n_nodes)}
    for s, lab, t in g.edges:
        out[s].append((lab, t))

    # group each node's children into tie-groups once, up front
    grouped: dict[int, list[list[tuple[str, int]]]] = {}
    n_orderings = 1
    for v in range(g.n_nodes):
        keyed = sorted(
            ((elab, repr(_struct_key(g, t, frozenset([v, t]))), t)
             for elab, t in out[v]),
            key=lambda x: (x[0], x[1]))
        groups: list[list[tuple[str, int]]] = []
        for (elab, skey, t) in keyed:
            if groups and groups[-1][0][:2] == (elab, skey):
                groups[-1].append((elab, skey, t))
            else:
                groups.append([(elab, skey, t)])
        grouped[v] = groups
        for grp in groups:
            for k in range(2, len(grp) + 1):
                n_orderings *= k

    def orderings(v: int):
        groups = grouped[v]
        if n_orderings > _CANON_ENUM_CAP:
            yield [(elab, t) for grp in groups for (elab, _, t) in grp]
            return
        perms = [itertools.permutations(grp) if len(grp) > 1 else [tuple(grp)]
                 for grp in groups]
        for combo in itertools.product(*perms):
            yield [(elab, t) for grp in combo for (elab, _, t) in grp]

    def render(v, order_choice, names, nts, pieces):
        lab = g.nodes[v]
        if v in names:
            pieces.append(names[v])
            return
        name = f"c{len(names)}"
        names[v] = name
        if is_nonterminal(lab):
            nts[v] = len(nts) + 1
            lab = f"#X{nts[v]}#"
        pieces.append(f"({name} / {lab}")
        for elab, t in order_choice[v]:
            pieces.append(f" :{elab} ")
            render(t, order_choice, names, nts, pieces)
        pieces.append(")")

    def expand(v, order_choice):
        # fix an ordering for every node reachable below v, depth-first
        pending = [v]
        seen = set()
        while pending:
            u = pending.pop()
            if u in seen:
                continue
            seen.add(u)
            for _, t in out[u]:
                pending.append(t)
        todo = [u for u in sorted(seen) if u not in order_choice]
        if not todo:
            yield dict(order_choice)
            return
        u = todo[0]
        for o in orderings(u):
            yield from expand(v, {**order_choice, u: o})

    for choice in expand(g.root, {}):
        names: dict[int, str] = {}
        nts: dict[int, int] = {}
        pieces: list[str] = []
        render(g.root, choice, names, nts, pieces)
        yield "".join(pieces), nts


def canonical_parts(f: AmrGraph) -> tuple[str, dict[int, int]]:
    """Canonical string plus the nonterminal renumbering that produced it."""
    best = None
    for s, nts in _canon_serializations(f):
        if best is None or s < best[0]:
            best = (s, nts)
    return best


def canonical_form(f: AmrGraph) -> str:
    """Deterministic string, equal exactly for isomorphic fragments.

    Variables are renamed by DFS discovery order with child edges sorted
    by (edge label, subtree form); nonterminal markers are renumbered in
    occurrence order.
    """
    return canonical_parts(f)[0]


def match_fragment(g: AmrGraph, f: AmrFragment) -> list[FragmentMatch]:
    """All injective embeddings of f in g, in deterministic order.

    Fragment edges map to distinct graph edges with equal labels; concept
    labels must be equal; fragment nonterminal nodes bind only to graph
    nonterminal nodes (any marker index).
    """
    raw = matching.find_embeddings(g._index(), f._pattern())
    seen = set()
    matches = []
    for binding, edge_map in raw:
        bdict = dict(enumerate(binding))
        key = (tuple(binding), frozenset(edge_map))
        if key in seen:
            continue
        seen.add(key)
        matches.append(FragmentMatch(binding=bdict,
                                     matched_edges=frozenset(edge_map),
                                     root_image=binding[f.root]))
    matches.sort(key=FragmentMatch._key)
    return matches


def collapse_match(g: AmrGraph, m: FragmentMatch,
                   partial_translation: tuple[str, ...]) -> AmrGraph:
    """Replace the matched subgraph by one fresh nonterminal node.

    Matched nodes are removed (nonterminal-bound ones are consumed along
    with their attachments); every edge between an unmatched node and a
    matched node is re-attached to the fresh node with direction and label
    preserved.  Unmatched edges joining two matched nodes become self-loops
    on the fresh node.  The fresh node carries partial_translation.
    """
    matched_nodes = set(m.binding.values())
    if len(matched_nodes) != len(m.binding):
        raise MatchError("binding is not injective")
    for v in matched_nodes:
        if not 0 <= v < g.n_nodes:
            raise MatchError(f"bound node {v} not in graph")
    for ei in m.matched_edges:
        if not 0 <= ei < g.n_edges:
            raise MatchError(f"matched edge {ei} not in graph")
        s, _, t = g.edges[ei]
        if s not in matched_nodes or t not in matched_nodes:
            raise MatchError(f"matched edge {ei} leaves the matched node set")

    fresh_label = f"#X{g.max_nt_index() + 1}#"
    keep = [v for v in range(g.n_nodes) if v not in matched_nodes]
    remap = {v: i for i, v in enumerate(keep)}
    fresh = len(keep)

    labels = tuple(g.nodes[v] for v in keep) + (fresh_label,)
    edges = []
    for ei, (s, lab, t) in enumerate(g.edges):
        if ei in m.matched_edges:
            continue
        edges.append((remap.get(s, fresh), lab, remap.get(t, fresh)))

    attachments = {remap[v]: a for v, a in g.attachments.items()
                   if v in remap}
    attachments[fresh] = tuple(partial_translation)
    root = fresh if g.root in matched_nodes else remap[g.root]
    return AmrGraph(labels, tuple(edges), root, attachments)


def graph_distance(g: AmrGraph, a: int, b: int) -> int:
    """Undirected shortest-path length between two nodes."""
    if not (0 <= a < g.n_nodes and 0 <= b < g.n_nodes):
        raise ValueError(f"unknown node id: {a if a >= g.n_nodes else b}")
    if a == b:
        return 0
    adj: dict[int, set[int]] = {}
    for s, _, t in g.edges:
        adj.setdefault(s, set()).add(t)
        adj.setdefault(t, set()).add(s)
    frontier, seen, d = {a}, {a}, 0
    while frontier:
        d += 1
        nxt = set()
        for v in frontier:
            for w in adj.get(v, ()):
                if w == b:
                    return d
                if w not in seen:
                    seen.add(w)
                    nxt.add(w)
        frontier = nxt
    raise ValueError(f"nodes {a} and {b} are not connected")


def induced_fragment(g: AmrGraph, node_set: set[int],
                     root: int) -> tuple[AmrFragment, dict[int, int]]:
    """Fragment induced by node_set (all internal edges), re-indexed.

    Returns the fragment and the map from graph node ids to fragment ids.
    Edge order follows the graph's edge order.
    """
    order = sorted(node_set)
    remap = {v: i for i, v in enumerate(order)}
    labels = tuple(g.nodes[v] for v in order)
    edges = tuple((remap[s], lab, remap[t]) for s, lab, t in g.edges
                  if s in node_set and t in node_set)
    frag = AmrFragment(labels, edges, remap[root])
    return frag, remap


@lru_cache(maxsize=4096)
def _parsed_fragment_cached(text: str) -> AmrFragment:
    return parse_fragment(text)
