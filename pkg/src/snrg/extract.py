"""Rule induction: initial extraction, containment collapsing, estimation.

Per instance, every alignment-consistent (rooted connected fragment,
contiguous token span) pair becomes an initial rule; each ordered pair of
initial rules where one contains the other yields one collapsed rule with
a single shared nonterminal.  Estimation then deduplicates the instance
multiset and fits the four translation probability features.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Instance
from .graph import (AmrFragment, canonical_parts, collapse_match,
                    induced_fragment, is_nonterminal, match_fragment,
                    nt_index)
from .rules import (RuleFeatures, RuleTable, SynchronousRule,
                    derive_nt_alignment, fragment_labels, parse_fragment,
                    MIN_PROB)


@dataclass(frozen=True)
class ExtractConfig:
    max_fragment_nodes: int = 5
    max_absorbed_tokens: int = 2      # unaligned boundary tokens, per side


class ContainmentError(ValueError):
    """collapse_rules called on a pair that fails the containment check."""


def _directed_reach(graph) -> list[set[int]]:
    out = {}
    for s, _, t in graph.edges:
        out.setdefault(s, []).append(t)
    reach = []
    for v in range(graph.n_nodes):
        seen = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for w in out.get(u, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        reach.append(seen)
    return reach


def _depths(graph) -> list[int]:
    out = {}
    for s, _, t in graph.edges:
        out.setdefault(s, []).append(t)
    depth = [-1] * graph.n_nodes
    depth[graph.root] = 0
    frontier = [graph.root]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for v in frontier:
            for w in out.get(v, ()):
                if depth[w] < 0:
                    depth[w] = d
                    nxt.append(w)
        frontier = nxt
    return depth


def _closure(graph, targets: set[int], reach, depth) -> tuple[set[int], int]:
    """Smallest rooted node set covering targets: deepest node reaching all
    targets becomes the root, plus shortest directed paths to each target."""
    cands = [v for v in range(graph.n_nodes) if targets <= reach[v]]
    root = max(cands, key=lambda v: (depth[v], -v))
    out = {}
    for s, _, t in graph.edges:
        out.setdefault(s, []).append(t)
    parent = {root: None}
    frontier = [root]
    while frontier:
        nxt = []
        for v in frontier:
            for w in out.get(v, ()):
                if w not in parent:
                    parent[w] = v
                    nxt.append(w)
        frontier = nxt
    nodes = {root}
    for u in targets:
        while u not in nodes:
            nodes.add(u)
            u = parent[u]
    return nodes, root


def extract_initial_rules(inst: Instance,
                          config: ExtractConfig = ExtractConfig()
                          ) -> list[SynchronousRule]:
    """All alignment-consistent all-terminal rules of one instance.

    A span's fragment is the alignment closure of its tokens plus the
    unaligned nodes needed for rooted connectivity; spans with aligned
    boundary tokens may then absorb adjacent unaligned tokens.
    """
    n = len(inst.tokens)
    if not inst.alignment:
        return []
    token_nodes: list[set[int]] = [set() for _ in range(n)]
    node_spans: dict[int, list[tuple[int, int]]] = {}
    for i, j, v in inst.alignment:
        for t in range(i, j):
            token_nodes[t].add(v)
        node_spans.setdefault(v, []).append((i, j))
    aligned = [bool(s) for s in token_nodes]
    reach = _directed_reach(inst.graph)
    depth = _depths(inst.graph)

    rules = []
    for i in range(n):
        if not aligned[i]:
            continue
        for j in range(i + 1, n + 1):
            if not aligned[j - 1]:
                continue
            targets = set()
            for t in range(i, j):
                targets |= token_nodes[t]
            if not targets:
                continue
            nodes, root = _closure(inst.graph, targets, reach, depth)
            if len(nodes) > config.max_fragment_nodes:
                continue
            consistent = all(
                i <= a and b <= j
                for v in nodes for (a, b) in node_spans.get(v, ()))
            if not consistent:
                continue
            frag, _ = induced_fragment(inst.graph, nodes, root)
            for a in range(config.max_absorbed_tokens + 1):
                lo = i - a
                if lo < 0 or (a > 0 and aligned[lo]):
                    break
                for b in range(config.max_absorbed_tokens + 1):
                    hi = j + b
                    if hi > n or (b > 0 and aligned[hi - 1]):
                        break
                    rules.append(SynchronousRule(
                        "X", frag, tuple(inst.tokens[lo:hi]), {},
                        "induced-initial"))
    return rules


def _find_subseq(haystack: tuple, needle: tuple) -> int:
    if not needle or len(needle) > len(haystack):
        return -1
    for i in range(len(haystack) - len(needle) + 1):
        if haystack[i:i + len(needle)] == needle:
            return i
    return -1


def rule_contains(r_i: SynchronousRule, r_j: SynchronousRule) -> bool:
    """True iff r_j's fragment embeds in r_i's, r_j's phrase is a
    contiguous subphrase of r_i's, and the pair is proper."""
    if r_i.key() == r_j.key():
        return False
    if _find_subseq(r_i.phrase, r_j.phrase) < 0:
        return False
    return bool(match_fragment(r_i.frag, r_j.frag))


def collapse_rules(r_i: SynchronousRule,
                   r_j: SynchronousRule) -> SynchronousRule:
    """Replace r_j's subgraph in r_i by a fresh nonterminal, and r_j's
    subphrase by the same nonterminal token."""
    if not rule_contains(r_i, r_j):
        raise ContainmentError("r_i does not contain r_j")
    m = match_fragment(r_i.frag, r_j.frag)[0]
    k = r_i.frag.max_nt_index() + 1
    collapsed = collapse_match(r_i.frag, m, ())
    frag = AmrFragment(collapsed.nodes, collapsed.edges, collapsed.root)
    p = _find_subseq(r_i.phrase, r_j.phrase)
    phrase = (r_i.phrase[:p] + (f"#X{k}#",)
              + r_i.phrase[p + len(r_j.phrase):])
    return SynchronousRule("X", frag, phrase,
                           derive_nt_alignment(frag, phrase),
                           "induced-collapsed")


def induce_grammar(corpus: list[Instance],
                   config: ExtractConfig = ExtractConfig()
                   ) -> list[SynchronousRule]:
    """The full rule-instance multiset: initial rules plus one collapsed
    rule per ordered containing pair, per instance."""
    out: list[SynchronousRule] = []
    for inst in corpus:
        current = extract_initial_rules(inst, config)
        for i, r_i in enumerate(current):
            out.append(r_i)
            for j, r_j in enumerate(current):
                if i == j:
                    continue
                if rule_contains(r_i, r_j):
                    out.append(collapse_rules(r_i, r_j))
    return out


def _normalize(rule: SynchronousRule) -> SynchronousRule:
    """Rewrite the rule over the canonical fragment, renumbering markers."""
    canon, nt_map = canonical_parts(rule.frag)
    frag = parse_fragment(canon)
    old_to_new = {nt_index(rule.frag.nodes[v]): new_k
                  for v, new_k in nt_map.items()}
    phrase = tuple(
        f"#X{old_to_new[nt_index(tok)]}#" if is_nonterminal(tok) else tok
        for tok in rule.phrase)
    return SynchronousRule(rule.lhs, frag, phrase,
                           derive_nt_alignment(frag, phrase), rule.kind)


def estimate_probabilities(instances: list[SynchronousRule]) -> RuleTable:
    """Deduplicate instances and fit the four translation features.

    Rule counts: one unit per instance of a (fragment, phrase) pair, MLE
    normalized in both directions.  The label-word table is estimated from
    initial rules with uniform weight 1/|phrase words| per label
    occurrence, then lexical features are the product-of-sums over the
    rule's own labels and words (floored at MIN_PROB when a side has no
    terminals to sum over).
    """
    normalized = [_normalize(r) for r in instances]

    counts: dict[tuple[str, tuple[str, ...]], float] = {}
    kinds: dict[tuple[str, tuple[str, ...]], str] = {}
    samples: dict[tuple[str, tuple[str, ...]], SynchronousRule] = {}
    for rule in normalized:
        key = rule.key()
        counts[key] = counts.get(key, 0.0) + 1.0
        kinds[key] = rule.kind
        samples[key] = rule

    by_e: dict[tuple[str, ...], float] = {}
    by_f: dict[str, float] = {}
    for (canon, phrase), c in counts.items():
        by_e[phrase] = by_e.get(phrase, 0.0) + c
        by_f[canon] = by_f.get(canon, 0.0) + c

    # label-word co-occurrence from aligned initial rules
    cooc: dict[tuple[str, str], float] = {}
    w_total: dict[str, float] = {}
    l_total: dict[str, float] = {}
    for rule in normalized:
        if rule.kind != "induced-initial":
            continue
        words = rule.terminal_words()
        if not words:
            continue
        weight = 1.0 / len(words)
        for lab in fragment_labels(rule.frag):
            for w in words:
                cooc[(lab, w)] = cooc.get((lab, w), 0.0) + weight
    for (lab, w), c in cooc.items():
        w_total[w] = w_total.get(w, 0.0) + c
        l_total[lab] = l_total.get(lab, 0.0) + c

    lex_l_given_w = {(lab, w): c / w_total[w] for (lab, w), c in cooc.items()}
    lex_w_given_l = {(lab, w): c / l_total[lab] for (lab, w), c in cooc.items()}

    table = RuleTable()
    table.counts = dict(counts)
    table.lex_l_given_w = lex_l_given_w
    table.lex_w_given_l = lex_w_given_l

    for key in sorted(counts, key=lambda k: (k[0], k[1])):
        canon, phrase = key
        rule = samples[key]
        labels = fragment_labels(rule.frag)
        words = rule.terminal_words()
        pw_f = 1.0
        for lab in labels:
            s = sum(lex_l_given_w.get((lab, w), 0.0) for w in words)
            pw_f *= s
        pw_e = 1.0
        for w in words:
            s = sum(lex_w_given_l.get((lab, w), 0.0) for lab in labels)
            pw_e *= s
        feats = RuleFeatures(
            p_f_given_e=counts[key] / by_e[phrase],
            p_e_given_f=counts[key] / by_f[canon],
            pw_f_given_e=max(pw_f, MIN_PROB),
            pw_e_given_f=max(pw_e, MIN_PROB))
        table.add(SynchronousRule(rule.lhs, rule.frag, rule.phrase,
                                  rule.nt_alignment, kinds[key], feats))
    return table
