"""Shared builders for graphs, instances, rules and toy corpora."""

from __future__ import annotations

import random

import pytest

from snrg.corpus import Instance
from snrg.graph import AmrFragment, AmrGraph, parse_fragment, parse_penman
from snrg.rules import RuleFeatures, RuleTable, SynchronousRule, \
    derive_nt_alignment

FIGURE2_PENMAN = "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))"
FIGURE2_SENTENCE = "the boy wants to go"
# want-01 = node 0, boy = 1, go-01 = 2
FIGURE2_LINKS = frozenset({(0, 2, 1), (2, 3, 0), (4, 5, 2)})

TABLE1_RULES = [
    ("(b / boy)", "the boy", "induced-initial"),
    ("(w / want-01 :ARG0 (X / #X1#))", "#X1# wants", "induced-collapsed"),
    ("(X / #X1# :ARG1 (g / go-01 :ARG0 X))", "#X1# to go",
     "induced-collapsed"),
    ("(w / want-01 :ARG0 (b / boy))", "the boy wants", "induced-initial"),
]


def make_rule(f_text, e_text, kind="induced-initial",
              features=(1.0, 1.0, 1.0, 1.0)) -> SynchronousRule:
    frag = parse_fragment(f_text)
    phrase = tuple(e_text.split())
    feats = RuleFeatures(*features) if features is not None else None
    return SynchronousRule("X", frag, phrase,
                           derive_nt_alignment(frag, phrase), kind, feats)


def table_of(rule_specs) -> RuleTable:
    table = RuleTable()
    for spec in rule_specs:
        table.add(make_rule(*spec))
    return table


@pytest.fixture
def figure2_graph() -> AmrGraph:
    return parse_penman(FIGURE2_PENMAN)


@pytest.fixture
def figure2_instance(figure2_graph) -> Instance:
    return Instance(tuple(FIGURE2_SENTENCE.split()), figure2_graph,
                    FIGURE2_LINKS)


@pytest.fixture
def table1() -> RuleTable:
    return table_of(TABLE1_RULES)


def random_graph(rng: random.Random, max_nodes=8, labels=None,
                 extra_edge_prob=0.3, edge_labels=None) -> AmrGraph:
    """Random rooted connected graph: a spanning tree from node 0 plus a
    few extra (possibly re-entrant or parallel) edges."""
    labels = labels or ["want-01", "boy", "go-01", "girl", "see-01",
                        "dog", "run-02", "believe-01"]
    edge_labels = edge_labels or ["ARG0", "ARG1", "ARG2", "mod", "time"]
    n = rng.randint(1, max_nodes)
    node_labels = tuple(rng.choice(labels) for _ in range(n))
    edges = []
    for v in range(1, n):
        parent = rng.randrange(v)
        edges.append((parent, rng.choice(edge_labels), v))
    n_extra = sum(1 for _ in range(2) if rng.random() < extra_edge_prob)
    for _ in range(n_extra):
        if n < 2:
            break
        s, t = rng.randrange(n), rng.randrange(n)
        edges.append((s, rng.choice(edge_labels), t))
    return AmrGraph(node_labels, tuple(edges), 0)


def random_subfragment(rng: random.Random, g: AmrGraph,
                       max_nodes=4) -> AmrFragment:
    """A rooted connected fragment that occurs in g (grown along edges)."""
    root = rng.randrange(g.n_nodes)
    nodes = {root}
    out = {}
    for s, lab, t in g.edges:
        out.setdefault(s, []).append(t)
    frontier = [root]
    while frontier and len(nodes) < max_nodes:
        v = frontier.pop(rng.randrange(len(frontier)))
        for w in out.get(v, ()):
            if w not in nodes and rng.random() < 0.7 \
                    and len(nodes) < max_nodes:
                nodes.add(w)
                frontier.append(w)
    order = sorted(nodes)
    remap = {v: i for i, v in enumerate(order)}
    edges = tuple((remap[s], lab, remap[t]) for s, lab, t in g.edges
                  if s in nodes and t in nodes)
    # keep only edges reachable from the chosen root to stay rooted
    keep_nodes = {remap[root]}
    changed = True
    while changed:
        changed = False
        for s, _, t in edges:
            if s in keep_nodes and t not in keep_nodes:
                keep_nodes.add(t)
                changed = True
    order2 = sorted(keep_nodes)
    remap2 = {v: i for i, v in enumerate(order2)}
    labels = tuple(g.nodes[order[v]] for v in order2)
    edges2 = tuple((remap2[s], lab, remap2[t]) for s, lab, t in edges
                   if s in keep_nodes and t in keep_nodes)
    return AmrFragment(labels, edges2, remap2[remap[root]])


NOUNS = ["boy", "girl", "dog", "cat", "team", "city"]
VERBS = ["run", "walk", "sing", "jump", "win", "talk"]
ADJS = ["happy", "small", "fast", "quiet"]

# (token pattern, PENMAN pattern, {token index: node address}); every node
# is aligned so whole-sentence rules extract consistently
TEMPLATES = [
    ("the {A} {B}s", "(v / {B}-01 :ARG0 (n / {A}))", {1: "0.0", 2: "0"}),
    ("a {A} {B}s the {C}",
     "(v / {B}-01 :ARG0 (n / {A}) :ARG1 (m / {C}))",
     {1: "0.0", 2: "0", 4: "0.1"}),
    ("the {A} is {J}", "(j / {J} :domain (n / {A}))", {1: "0.0", 3: "0"}),
    ("{A} wants to {B}",
     "(w / want-01 :ARG0 (n / {A}) :ARG1 (v / {B}-01 :ARG0 n))",
     {0: "0.0", 1: "0", 3: "0.1"}),
    ("the {A} of the {C}", "(n / {A} :poss (m / {C}))",
     {1: "0", 4: "0.0"}),
    ("{A} and {C}", "(x / and :op1 (n / {A}) :op2 (m / {C}))",
     {0: "0.0", 1: "0", 2: "0.1"}),
    ("the {A} {B}s the {C} now",
     "(v / {B}-01 :ARG0 (n / {A}) :ARG1 (m / {C}) :time (t / now))",
     {1: "0.0", 2: "0", 4: "0.1", 5: "0.2"}),
    ("{A} {B}s {J}",
     "(v / {B}-01 :ARG0 (n / {A}) :manner (j / {J}))",
     {0: "0.0", 1: "0", 2: "0.1"}),
    ("the {A} sees a {C}",
     "(s / see-01 :ARG0 (n / {A}) :ARG1 (m / {C}))",
     {1: "0.0", 2: "0", 4: "0.1"}),
    ("{A} must {B}",
     "(p / possible-01 :ARG1 (v / {B}-01 :ARG0 (n / {A})))",
     {0: "0.0.0", 1: "0", 2: "0.0"}),
]


def template_corpus(n_sentences=100, seed=1) -> str:
    """Synthetic self-aligned corpus text drawn from the 10 templates."""
    rng = random.Random(seed)
    records = []
    for i in range(n_sentences):
        pattern, penman, links = TEMPLATES[i % len(TEMPLATES)]
        subst = {"A": rng.choice(NOUNS), "B": rng.choice(VERBS),
                 "C": rng.choice(NOUNS), "J": rng.choice(ADJS)}
        sent = pattern.format(**subst)
        graph = penman.format(**subst)
        align = " ".join(f"{tok}-{tok + 1}|{addr}"
                         for tok, addr in sorted(links.items()))
        records.append(f"# ::snt {sent}\n# ::alignments {align}\n{graph}\n")
    return "\n".join(records)


def planted_mert_setup(n=20):
    """n two-node graphs; each has a correct and a decoy full-cover rule.

    The correct rule carries higher translation probabilities, so the
    BLEU-optimal direction is the translation features; decoys win ties
    at zero weights by sorting lexicographically earlier.
    """
    from snrg.rules import RuleTable

    graphs, refs = [], []
    table = RuleTable()
    for i in range(n):
        noun, verb = f"noun{i}", f"verb{i}"
        g = parse_penman(f"(v / {verb} :ARG0 (n / {noun}))")
        correct = f"the {noun} {verb}"
        decoy = f"aaa bbb{i}"
        table.add(make_rule(f"(v / {verb} :ARG0 (n / {noun}))", correct,
                            "induced-initial", (0.9, 0.9, 0.9, 0.9)))
        table.add(make_rule(f"(v / {verb} :ARG0 (n / {noun}))", decoy,
                            "induced-initial", (0.1, 0.1, 0.1, 0.1)))
        graphs.append(g)
        refs.append(correct)
    return graphs, refs, table


def random_instance(rng: random.Random, max_nodes=6) -> Instance:
    """Random graph with a synthetic sentence and partial alignment."""
    g = random_graph(rng, max_nodes)
    words = []
    links = set()
    pos = 0
    node_order = list(range(g.n_nodes))
    rng.shuffle(node_order)
    for v in node_order:
        if rng.random() < 0.2:
            words.append(f"filler{rng.randrange(3)}")
            pos += 1
        if rng.random() < 0.85:
            word = g.nodes[v].split("-")[0]
            words.append(word)
            links.add((pos, pos + 1, v))
            pos += 1
    if not words:
        words = [g.nodes[g.root].split("-")[0]]
        links = {(0, 1, g.root)}
    return Instance(tuple(words), g, frozenset(links))
