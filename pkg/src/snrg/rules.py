"""Synchronous rules, the deduplicated rule table, and grammar utilities.

A rule rewrites a nonterminal node into an AMR fragment while emitting a
target phrase; nonterminal markers "#Xk#" in fragment and phrase are paired
by the rule's alignment.  Four rule kinds exist: induced-initial and
induced-collapsed (learned from data), concept (single node, morphological
string) and glue (label-specific nonterminal concatenation).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .graph import (AmrFragment, AmrGraph, canonical_parts, is_nonterminal,
                    match_fragment, nt_index, parse_fragment)

KINDS = ("induced-initial", "induced-collapsed", "concept", "glue")
FIXED_RULE_PROB = 0.0001          # concept and glue rule features
MIN_PROB = 1e-12                  # floor for degenerate lexical products


class GrammarFormatError(ValueError):
    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class RuleFeatures:
    p_f_given_e: float
    p_e_given_f: float
    pw_f_given_e: float
    pw_e_given_f: float

    def __post_init__(self):
        # MLE features are probabilities; the lexicalized product-of-sums
        # is positive but unbounded (sums range over several words/labels)
        for name in ("p_f_given_e", "p_e_given_f"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"feature {name}={v} outside (0, 1]")
        for name in ("pw_f_given_e", "pw_e_given_f"):
            v = getattr(self, name)
            if not v > 0.0:
                raise ValueError(f"feature {name}={v} must be positive")

    def as_dict(self):
        return {"p_f_given_e": self.p_f_given_e,
                "p_e_given_f": self.p_e_given_f,
                "pw_f_given_e": self.pw_f_given_e,
                "pw_e_given_f": self.pw_e_given_f}

    def log_tuple(self):
        floor = math.log(MIN_PROB)
        return tuple(max(math.log(v), floor) for v in
                     (self.p_f_given_e, self.p_e_given_f,
                      self.pw_f_given_e, self.pw_e_given_f))


FIXED_FEATURES = RuleFeatures(FIXED_RULE_PROB, FIXED_RULE_PROB,
                              FIXED_RULE_PROB, FIXED_RULE_PROB)


@dataclass(frozen=True)
class SynchronousRule:
    """lhs -> (frag, phrase) with nonterminal alignment."""

    lhs: str
    frag: AmrFragment
    phrase: tuple[str, ...]
    nt_alignment: dict[int, int]      # fragment node id -> phrase position
    kind: str
    features: RuleFeatures | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        frag_nts = {v for v, lab in enumerate(self.frag.nodes)
                    if is_nonterminal(lab)}
        if set(self.nt_alignment) != frag_nts:
            raise ValueError("nonterminal alignment must cover exactly the "
                             "fragment's nonterminal nodes")
        for v, p in self.nt_alignment.items():
            if not (0 <= p < len(self.phrase)
                    and is_nonterminal(self.phrase[p])):
                raise ValueError(f"alignment target {p} is not a "
                                 f"nonterminal token")
        if self.kind.startswith("induced") and len(frag_nts) > 1:
            raise ValueError("induced rules carry at most one nonterminal")

    def canonical(self) -> str:
        cached = self.__dict__.get("_canon")
        if cached is None:
            cached = canonical_parts(self.frag)[0]
            self.__dict__["_canon"] = cached
        return cached

    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.canonical(), self.phrase)

    def has_nonterminal(self) -> bool:
        return bool(self.nt_alignment)

    def terminal_node_count(self) -> int:
        return sum(1 for lab in self.frag.nodes if not is_nonterminal(lab))

    def terminal_words(self) -> list[str]:
        return [t for t in self.phrase if not is_nonterminal(t)]

    def category(self) -> str:
        """Decode-usage category: glue / nonterminal / terminal."""
        if self.kind == "glue":
            return "glue"
        return "nonterminal" if self.has_nonterminal() else "terminal"


def fragment_labels(frag: AmrGraph) -> list[str]:
    """All terminal labels of a fragment: concepts plus edge labels."""
    labels = [lab for lab in frag.nodes if not is_nonterminal(lab)]
    labels.extend(lab for _, lab, _ in frag.edges)
    return labels


def derive_nt_alignment(frag: AmrFragment,
                        phrase: tuple[str, ...]) -> dict[int, int]:
    """Pair fragment and phrase nonterminals by their #Xk# indices."""
    by_index = {}
    for p, tok in enumerate(phrase):
        if is_nonterminal(tok):
            k = nt_index(tok)
            if k in by_index:
                raise ValueError(f"duplicate nonterminal token #X{k}#")
            by_index[k] = p
    alignment = {}
    for v, lab in enumerate(frag.nodes):
        if is_nonterminal(lab):
            k = nt_index(lab)
            if k not in by_index:
                raise ValueError(f"fragment nonterminal #X{k}# missing "
                                 f"from phrase")
            alignment[v] = by_index[k]
    if len(alignment) != len(by_index):
        raise ValueError("phrase has nonterminals absent from fragment")
    return alignment


class RuleTable:
    """Rules indexed by the canonical form of their fragment."""

    def __init__(self):
        self.rules: list[SynchronousRule] = []
        self.by_canon: dict[str, list[int]] = {}
        self.counts: dict[tuple[str, tuple[str, ...]], float] = {}
        self.lex_l_given_w: dict[tuple[str, str], float] = {}
        self.lex_w_given_l: dict[tuple[str, str], float] = {}

    def __len__(self):
        return len(self.rules)

    def add(self, rule: SynchronousRule) -> int:
        rid = len(self.rules)
        self.rules.append(rule)
        self.by_canon.setdefault(rule.canonical(), []).append(rid)
        return rid

    def lookup(self, frag: AmrFragment) -> list[SynchronousRule]:
        """Rules whose fragment is isomorphic to the query."""
        canon = canonical_parts(frag)[0]
        return [self.rules[i] for i in self.by_canon.get(canon, ())]

    def edge_labels(self) -> set[str]:
        labels = set()
        for rule in self.rules:
            labels.update(lab for _, lab, _ in rule.frag.edges)
        return labels


def _morph_string(label: str) -> str:
    if label.startswith('"') and label.endswith('"') and len(label) >= 2:
        word = label[1:-1].lower()
    else:
        word = re.sub(r"-\d+\Z", "", label)
    return word if word else label.lower()


def make_concept_rules(g: AmrGraph,
                       verbalization: list[tuple[AmrFragment, tuple[str, ...]]]
                       | None = None) -> list[SynchronousRule]:
    """One single-node rule per input node, plus matching lexicon patterns.

    Sense suffixes are stripped ("want-01" -> "want"), literals are
    lowercased.  All features are fixed at 0.0001.
    """
    rules = []
    seen = set()
    for lab in g.nodes:
        if is_nonterminal(lab) or lab in seen:
            continue
        seen.add(lab)
        frag = AmrFragment((lab,), (), 0)
        phrase = tuple(_morph_string(lab).split()) or (_morph_string(lab),)
        rules.append(SynchronousRule("X", frag, phrase, {}, "concept",
                                     FIXED_FEATURES))
    for frag, phrase in verbalization or ():
        if match_fragment(g, frag):
            rules.append(SynchronousRule("X", frag, phrase,
                                         derive_nt_alignment(frag, phrase),
                                         "concept", FIXED_FEATURES))
    return rules


def make_glue_rules(labels: set[str]) -> list[SynchronousRule]:
    """Per edge label: monotonic and inverse concatenation, plus the
    self-edge collapse.  All features are fixed at 0.0001."""
    rules = []
    for lab in sorted(labels):
        pair = AmrFragment(("#X1#", "#X2#"), ((0, lab, 1),), 0)
        single = AmrFragment(("#X1#",), ((0, lab, 0),), 0)
        rules.append(SynchronousRule("X", pair, ("#X1#", "#X2#"),
                                     {0: 0, 1: 1}, "glue", FIXED_FEATURES))
        rules.append(SynchronousRule("X", pair, ("#X2#", "#X1#"),
                                     {0: 1, 1: 0}, "glue", FIXED_FEATURES))
        rules.append(SynchronousRule("X", single, ("#X1#",),
                                     {0: 0}, "glue", FIXED_FEATURES))
    return rules


def load_verbalization(path) -> list[tuple[AmrFragment, tuple[str, ...]]]:
    """Lexicon lines: `<single-line PENMAN pattern> ||| <phrase>`."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("|||")
            if len(parts) != 2:
                raise GrammarFormatError("expected `pattern ||| phrase`", no)
            frag = parse_fragment(parts[0].strip())
            entries.append((frag, tuple(parts[1].split())))
    return entries


def grammar_stats(table: RuleTable, usage: list[str] | None = None) -> dict:
    """Rule-shape histogram, plus decode-usage split when a log is given."""
    histogram: dict[tuple[int, bool], int] = {}
    for rule in table.rules:
        key = (rule.terminal_node_count(), rule.has_nonterminal())
        histogram[key] = histogram.get(key, 0) + 1
    report = {"rhs_histogram": histogram, "n_rules": len(table.rules)}
    if usage is not None:
        total = len(usage)
        split = {cat: 0 for cat in ("glue", "nonterminal", "terminal")}
        for cat in usage:
            if cat not in split:
                raise ValueError(f"unknown usage category {cat!r}")
            split[cat] += 1
        report["usage"] = {cat: (n / total if total else 0.0)
                           for cat, n in split.items()}
    return report


def save_grammar(table: RuleTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rule in table.rules:
            if any("|||" in tok for tok in rule.phrase):
                raise ValueError("phrase token contains '|||'")
            f = rule.features
            fh.write("%s ||| %s ||| %s ||| %.12g %.12g %.12g %.12g ||| %s\n"
                     % (rule.lhs, rule.canonical(), " ".join(rule.phrase),
                        f.p_f_given_e, f.p_e_given_f,
                        f.pw_f_given_e, f.pw_e_given_f, rule.kind))


def load_grammar(path) -> RuleTable:
    table = RuleTable()
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = [p.strip() for p in line.split("|||")]
            if len(parts) != 5:
                raise GrammarFormatError(
                    f"expected 5 '|||' fields, found {len(parts)}", no)
            lhs, f_text, e_text, feat_text, kind = parts
            if kind not in KINDS:
                raise GrammarFormatError(f"unknown rule kind {kind!r}", no)
            feat_vals = feat_text.split()
            if len(feat_vals) != 4:
                raise GrammarFormatError("expected 4 feature values", no)
            try:
                feats = RuleFeatures(*(float(v) for v in feat_vals))
            except ValueError as exc:
                raise GrammarFormatError(str(exc), no) from exc
            try:
                frag = parse_fragment(f_text)
            except ValueError as exc:
                raise GrammarFormatError(f"bad fragment: {exc}", no) from exc
            phrase = tuple(e_text.split())
            try:
                alignment = derive_nt_alignment(frag, phrase)
                rule = SynchronousRule(lhs, frag, phrase, alignment,
                                       kind, feats)
            except ValueError as exc:
                raise GrammarFormatError(str(exc), no) from exc
            table.add(rule)
    return table
