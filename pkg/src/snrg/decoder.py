"""Bottom-up beam-search transduction of an AMR graph into strings.

Hypotheses hold a partially collapsed graph whose nonterminal nodes carry
partial translations.  Applying a rule collapses one fragment match into a
fresh nonterminal and splices the consumed translations into the rule's
phrase.  Beams group hypotheses by how much of the input has been
collapsed; the goal is a single nonterminal node, finished by the start
symbol.  Scoring is a 9-feature log-linear model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import lm as lm_mod
from .graph import (AmrGraph, FragmentMatch, collapse_match, graph_distance,
                    is_nonterminal, match_fragment)
from .reorder import INVERSE, MONOTONIC, ReorderModel, reorder_prob
from .rules import RuleTable, SynchronousRule, make_concept_rules, make_glue_rules

FEATURE_NAMES = ("p_f_given_e", "p_e_given_f", "pw_f_given_e", "pw_e_given_f",
                 "lm", "word_count", "rule_count", "reorder",
                 "moving_distance")
N_FEATURES = len(FEATURE_NAMES)

DEFAULT_WEIGHTS = (1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, -1.0)

ZERO_FEATURES = (0.0,) * N_FEATURES


class DecodeError(RuntimeError):
    pass


def score_hypothesis(features, weights) -> float:
    """Log-linear score: the weighted feature sum."""
    if len(features) != len(weights):
        raise ValueError("feature/weight dimension mismatch")
    return sum(w * f for w, f in zip(weights, features))


def save_weights(weights, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(FEATURE_NAMES) + "\n")
        fh.write(" ".join("%.12g" % w for w in weights) + "\n")


def load_weights(path) -> tuple[float, ...]:
    values = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            values.extend(float(tok) for tok in line.split())
    if len(values) != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES} weights, found {len(values)}")
    return tuple(values)


@dataclass(frozen=True)
class DecodeConfig:
    no_induced_rule: bool = False
    no_concept_rule: bool = False
    no_moving_distance: bool = False
    no_reorder_model: bool = False
    strict_reorder_triple: bool = False
    pair_beam_index: bool = False     # beam by (edges, nodes) instead of sum


@dataclass(frozen=True)
class Hypothesis:
    graph: AmrGraph
    features: tuple[float, ...]
    score: float
    last_root: int | None                      # original-graph node id
    applied: tuple[tuple[int, FragmentMatch], ...]
    coverage: tuple[int, int]                  # (collapsed edges, nodes)
    reps: tuple[int, ...]                      # current node -> original node
    blocks: tuple[frozenset[int], ...]         # current node -> covered set

    def joined(self) -> tuple[str, ...]:
        """All partial translations, in nonterminal creation order."""
        out = []
        for v in range(self.graph.n_nodes):
            out.extend(self.graph.attachments.get(v, ()))
        return tuple(out)

    def sort_key(self):
        return (-self.score, self.features[6], " ".join(self.joined()))


@dataclass(frozen=True)
class DecodeResult:
    tokens: tuple[str, ...]
    features: tuple[float, ...]
    score: float
    derivation: tuple[tuple[int, FragmentMatch], ...]
    categories: tuple[str, ...]

    @property
    def string(self) -> str:
        return " ".join(self.tokens)


def initial_hypothesis(g: AmrGraph) -> Hypothesis:
    return Hypothesis(graph=g, features=ZERO_FEATURES, score=0.0,
                      last_root=None, applied=(), coverage=(0, 0),
                      reps=tuple(range(g.n_nodes)),
                      blocks=tuple(frozenset([v]) for v in range(g.n_nodes)))


def decode_rules(table: RuleTable, g: AmrGraph,
                 config: DecodeConfig = DecodeConfig(),
                 verbalization=None) -> list[SynchronousRule]:
    """The effective rule list: table rules plus concept rules for the
    input and glue rules for every observed edge label, minus ablations.

    Rules whose fragment is a bare nonterminal node are dropped: they
    cannot increase coverage, which would break search termination.
    """
    rules: list[SynchronousRule] = []
    for rule in table.rules:
        if config.no_induced_rule and rule.kind.startswith("induced"):
            continue
        if config.no_concept_rule and rule.kind == "concept":
            continue
        if rule.frag.n_nodes == 1 and rule.frag.n_edges == 0 \
                and is_nonterminal(rule.frag.nodes[rule.frag.root]):
            continue
        rules.append(rule)
    if not config.no_concept_rule:
        rules.extend(make_concept_rules(g, verbalization))
    labels = table.edge_labels() | g.edge_labels()
    rules.extend(make_glue_rules(labels))
    return rules


def _emitted_tokens(rule: SynchronousRule, match: FragmentMatch,
                    hyp: Hypothesis) -> tuple[str, ...]:
    """The rule's phrase with consumed partial translations spliced in."""
    position_to_node = {p: v for v, p in rule.nt_alignment.items()}
    out: list[str] = []
    for p, tok in enumerate(rule.phrase):
        if is_nonterminal(tok):
            gnode = match.binding[position_to_node[p]]
            out.extend(hyp.graph.attachments.get(gnode, ()))
        else:
            out.append(tok)
    return tuple(out)


def compute_features(rule: SynchronousRule, match: FragmentMatch,
                     hyp: Hypothesis, original: AmrGraph,
                     lm=None, reorder_model: ReorderModel | None = None,
                     config: DecodeConfig = DecodeConfig(),
                     dist_cache: dict | None = None
                     ) -> tuple[tuple[float, ...], tuple[str, ...]]:
    """Feature increment of one rule application, plus the new tokens."""
    new_tokens = _emitted_tokens(rule, match, hyp)

    lm_delta = 0.0
    if lm is not None:
        lm_delta = lm_mod.score_fragment(lm, new_tokens)
        for v in rule.nt_alignment:
            gnode = match.binding[v]
            lm_delta -= lm_mod.score_fragment(
                lm, hyp.graph.attachments.get(gnode, ()))

    reorder_delta = 0.0
    if (rule.kind == "glue" and not config.no_reorder_model
            and reorder_model is not None and len(rule.nt_alignment) == 2):
        (ei,) = match.matched_edges
        gs, elab, gt = hyp.graph.edges[ei]
        head = original.nodes[hyp.reps[gs]]
        tail = original.nodes[hyp.reps[gt]]
        (fs, _, ft) = rule.frag.edges[0]
        orient = (MONOTONIC if rule.nt_alignment[fs] <= rule.nt_alignment[ft]
                  else INVERSE)
        reorder_delta = math.log(reorder_prob(
            reorder_model, head, elab, tail, orient,
            strict_triple=config.strict_reorder_triple))

    moving = 0.0
    if not config.no_moving_distance and hyp.last_root is not None:
        a, b = hyp.last_root, hyp.reps[match.root_image]
        if dist_cache is not None:
            key = (a, b) if a <= b else (b, a)
            if key not in dist_cache:
                dist_cache[key] = graph_distance(original, a, b)
            moving = float(dist_cache[key])
        else:
            moving = float(graph_distance(original, a, b))

    if rule.features is None:
        raise ValueError("rule has no estimated features")
    t1, t2, t3, t4 = rule.features.log_tuple()
    delta = (t1, t2, t3, t4, lm_delta,
             float(len(rule.terminal_words())), 1.0, reorder_delta, moving)
    return delta, new_tokens


def apply_rule(hyp: Hypothesis, rule_id: int, rule: SynchronousRule,
               match: FragmentMatch, original: AmrGraph, weights,
               lm=None, reorder_model=None,
               config: DecodeConfig = DecodeConfig(),
               counts=None, dist_cache=None) -> Hypothesis:
    """Collapse one match and fold the feature increment into the score."""
    delta, new_tokens = compute_features(rule, match, hyp, original, lm,
                                         reorder_model, config, dist_cache)
    new_graph = collapse_match(hyp.graph, match, new_tokens)

    matched = set(match.binding.values())
    keep = [v for v in range(hyp.graph.n_nodes) if v not in matched]
    reps = tuple(hyp.reps[v] for v in keep) + (hyp.reps[match.root_image],)
    merged = frozenset().union(*(hyp.blocks[v] for v in matched))
    blocks = tuple(hyp.blocks[v] for v in keep) + (merged,)

    if counts is None:
        t0, e0 = (sum(1 for lab in original.nodes
                      if not is_nonterminal(lab)), original.n_edges)
    else:
        t0, e0 = counts
    terminals_now = sum(1 for lab in new_graph.nodes
                        if not is_nonterminal(lab))
    coverage = (e0 - new_graph.n_edges, t0 - terminals_now)

    features = tuple(f + d for f, d in zip(hyp.features, delta))
    return Hypothesis(graph=new_graph, features=features,
                      score=score_hypothesis(features, weights),
                      last_root=hyp.reps[match.root_image],
                      applied=hyp.applied + ((rule_id, match),),
                      coverage=coverage, reps=reps, blocks=blocks)


def _is_goal(hyp: Hypothesis) -> bool:
    g = hyp.graph
    return (g.n_nodes == 1 and g.n_edges == 0
            and is_nonterminal(g.nodes[0]))


def _recomb_key(hyp: Hypothesis, ctx_len: int):
    node_sig = []
    for v in range(hyp.graph.n_nodes):
        lab = hyp.graph.nodes[v]
        att = hyp.graph.attachments.get(v)
        if att is None:
            boundary = None
        elif ctx_len == 0:
            boundary = ((), ())
        else:
            boundary = (att[:ctx_len], att[-ctx_len:])
        node_sig.append((min(hyp.blocks[v]), hyp.blocks[v],
                         "#NT" if is_nonterminal(lab) else lab, boundary))
    node_sig.sort()
    block_min = {v: min(hyp.blocks[v]) for v in range(hyp.graph.n_nodes)}
    edge_sig = sorted((block_min[s], lab, block_min[t])
                      for s, lab, t in hyp.graph.edges)
    return (tuple(node_sig), tuple(edge_sig), hyp.last_root)


def _prune(level: list[Hypothesis], beam_size, ctx_len) -> list[Hypothesis]:
    best: dict = {}
    for hyp in level:
        key = _recomb_key(hyp, ctx_len)
        cur = best.get(key)
        if cur is None or hyp.sort_key() < cur.sort_key():
            best[key] = hyp
    survivors = sorted(best.values(), key=Hypothesis.sort_key)
    if beam_size is not None and math.isfinite(beam_size):
        survivors = survivors[:int(beam_size)]
    return survivors


def finalize(hyp: Hypothesis, weights, lm=None,
             rules: list[SynchronousRule] | None = None) -> DecodeResult:
    """Exact-LM re-score of a hypothesis and conversion to a result."""
    tokens = hyp.joined()
    features = hyp.features
    if lm is not None:
        features = features[:4] + (lm_mod.score(lm, tokens),) + features[5:]
    categories = tuple(rules[rid].category() for rid, _ in hyp.applied) \
        if rules is not None else ()
    return DecodeResult(tokens=tokens, features=features,
                        score=score_hypothesis(features, weights),
                        derivation=hyp.applied, categories=categories)


def decode(g: AmrGraph, table: RuleTable, lm=None,
           reorder_model: ReorderModel | None = None,
           weights=DEFAULT_WEIGHTS, beam_size=100, k=50,
           config: DecodeConfig = DecodeConfig(),
           verbalization=None) -> list[DecodeResult]:
    """k-best transductions of g under the log-linear model.

    Augments the table with concept and glue rules (subject to the
    ablation flags), searches bottom-up over coverage-indexed beams, and
    exact-LM re-scores the goal hypotheses.  Under NoConceptRule, when no
    full derivation exists the best partial hypothesis's translations are
    concatenated in creation order, untranslated subgraphs contributing
    nothing.
    """
    if beam_size is not None and beam_size != math.inf and beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    rules = decode_rules(table, g, config, verbalization)

    by_root_label: dict[str, list[int]] = {}
    nt_rooted: list[int] = []
    for rid, rule in enumerate(rules):
        root_lab = rule.frag.nodes[rule.frag.root]
        if is_nonterminal(root_lab):
            nt_rooted.append(rid)
        else:
            by_root_label.setdefault(root_lab, []).append(rid)

    t0 = sum(1 for lab in g.nodes if not is_nonterminal(lab))
    e0 = g.n_edges
    max_cov = t0 + e0
    ctx_len = (lm.order - 1) if lm is not None else 0
    dist_cache: dict = {}

    init = initial_hypothesis(g)
    beams: dict[int, list[Hypothesis]] = {0: [init]}
    goals: list[Hypothesis] = []
    best_partial = init

    for cov in range(0, max_cov + 1):
        level = beams.pop(cov, None)
        if not level:
            continue
        # goal hypotheses are collected before recombination so the k-best
        # list keeps alternatives; only expanded hypotheses recombine
        pending = []
        for hyp in level:
            if _is_goal(hyp):
                goals.append(hyp)       # the start-symbol step: derivation done
            else:
                pending.append(hyp)
        if config.pair_beam_index:
            groups: dict[tuple[int, int], list[Hypothesis]] = {}
            for hyp in pending:
                groups.setdefault(hyp.coverage, []).append(hyp)
            survivors = []
            for pair in sorted(groups):
                survivors.extend(_prune(groups[pair], beam_size, ctx_len))
        else:
            survivors = _prune(pending, beam_size, ctx_len)

        for hyp in survivors:
            if (sum(hyp.coverage), hyp.score) > \
                    (sum(best_partial.coverage), best_partial.score):
                best_partial = hyp
            candidate_ids: list[int] = []
            labels_here = set(hyp.graph.nodes)
            for lab in labels_here:
                candidate_ids.extend(by_root_label.get(lab, ()))
            if any(is_nonterminal(lab) for lab in labels_here):
                candidate_ids.extend(nt_rooted)
            for rid in sorted(candidate_ids):
                rule = rules[rid]
                for m in match_fragment(hyp.graph, rule.frag):
                    new = apply_rule(hyp, rid, rule, m, g, weights, lm,
                                     reorder_model, config, (t0, e0),
                                     dist_cache)
                    beams.setdefault(sum(new.coverage), []).append(new)

    if not goals:
        if config.no_concept_rule:
            return [finalize(best_partial, weights, lm, rules)]
        raise DecodeError("no derivation found; this cannot happen with "
                          "concept and glue augmentation enabled")

    results = [finalize(h, weights, lm, rules) for h in goals]
    results.sort(key=lambda r: (-r.score, r.features[6], r.string))
    return results[:k]


def replay(g: AmrGraph, rules: list[SynchronousRule],
           derivation, weights, lm=None, reorder_model=None,
           config: DecodeConfig = DecodeConfig()) -> DecodeResult:
    """Re-apply a recorded derivation; reproduces string and features."""
    hyp = initial_hypothesis(g)
    for rid, match in derivation:
        hyp = apply_rule(hyp, rid, rules[rid], match, g, weights, lm,
                         reorder_model, config)
    return finalize(hyp, weights, lm, rules)
