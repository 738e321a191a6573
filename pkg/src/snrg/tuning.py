"""Minimum error rate training over pooled k-best lists.

Each outer iteration decodes the dev set with the current weights, merges
the k-best candidates into per-sentence pools, and optimizes the weights
by exact line search (the piecewise-linear upper envelope of candidate
scores along one direction, swept against corpus BLEU).  Directions are
the coordinate axes, restarted from random points; the returned weights
maximize pooled 1-best BLEU over everything visited, so they can never be
worse than the initial weights on the final pool.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field

from .bleu import BleuStats, bleu_from_stats, sentence_stats, zero_stats
from .decoder import N_FEATURES

log = logging.getLogger(__name__)

NEG_INF = float("-inf")


@dataclass
class Candidate:
    tokens: tuple[str, ...]
    features: tuple[float, ...]
    stats: BleuStats

    @property
    def string(self) -> str:
        return " ".join(self.tokens)


@dataclass
class KBestPool:
    """Per-sentence candidate pools, merged and deduplicated across
    iterations."""

    references: list[str]
    max_n: int = 4
    lowercase: bool = True
    sentences: list[list[Candidate]] = field(default_factory=list)
    _seen: list[set] = field(default_factory=list)

    def __post_init__(self):
        if not self.sentences:
            self.sentences = [[] for _ in self.references]
            self._seen = [set() for _ in self.references]

    def add(self, sent: int, tokens: tuple[str, ...],
            features: tuple[float, ...]) -> None:
        key = (tokens, features)
        if key in self._seen[sent]:
            return
        self._seen[sent].add(key)
        stats = sentence_stats(tokens, self.references[sent], self.max_n,
                               self.lowercase)
        self.sentences[sent].append(Candidate(tokens, features, stats))

    def size(self) -> int:
        return sum(len(s) for s in self.sentences)


def _dot(w, f) -> float:
    return sum(a * b for a, b in zip(w, f))


def pool_best(pool: KBestPool, weights) -> list[Candidate]:
    """Per-sentence argmax under the weights; ties go to the smaller
    string so selection is deterministic."""
    chosen = []
    for cands in pool.sentences:
        if not cands:
            raise ValueError("pool has a sentence with no candidates")
        chosen.append(min(cands, key=lambda c: (-_dot(weights, c.features),
                                                c.string)))
    return chosen


def pool_bleu(pool: KBestPool, weights, smoothing: bool = True) -> float:
    agg = zero_stats(pool.max_n)
    for cand in pool_best(pool, weights):
        agg = agg + cand.stats
    return bleu_from_stats(agg, pool.max_n, smoothing)


def _envelope(lines):
    """Upper envelope of (slope, intercept, candidate) lines.

    Returns segments [(start_gamma, candidate)] ordered left to right,
    the first starting at -inf.
    """
    by_slope: dict[float, tuple[float, object]] = {}
    for slope, intercept, cand in lines:
        cur = by_slope.get(slope)
        if cur is None or intercept > cur[0] or \
                (intercept == cur[0] and cand.string < cur[1].string):
            by_slope[slope] = (intercept, cand)
    ordered = sorted((slope, ic, cand)
                     for slope, (ic, cand) in by_slope.items())

    hull: list[tuple[float, float, float, object]] = []  # start,slope,ic,cand
    for slope, intercept, cand in ordered:
        while hull:
            s0, m0, b0, _ = hull[-1]
            # intersection with the current hull top
            x = (b0 - intercept) / (slope - m0)
            if x <= s0:
                hull.pop()
                continue
            hull.append((x, slope, intercept, cand))
            break
        if not hull:
            hull.append((NEG_INF, slope, intercept, cand))
    return [(start, cand) for start, _, _, cand in hull]


def line_search(pool: KBestPool, weights, direction,
                smoothing: bool = True) -> tuple[float, float]:
    """Exact search along weights + gamma * direction.

    Sweeps the merged breakpoints of all sentence envelopes, scoring each
    interval's corpus BLEU incrementally, then re-evaluates the winning
    gamma authoritatively through pool_best.  Returns (gamma, bleu).
    """
    envelopes = []
    for cands in pool.sentences:
        lines = [(_dot(direction, c.features), _dot(weights, c.features), c)
                 for c in cands]
        envelopes.append(_envelope(lines))

    events: list[tuple[float, int, Candidate]] = []
    agg = zero_stats(pool.max_n)
    current: list[Candidate] = []
    for sent, segs in enumerate(envelopes):
        current.append(segs[0][1])
        agg = agg + segs[0][1].stats
        for start, cand in segs[1:]:
            events.append((start, sent, cand))
    events.sort(key=lambda e: e[0])

    def stats_minus_plus(agg, old, new):
        return BleuStats(
            tuple(a - o + n for a, o, n in
                  zip(agg.clipped, old.stats.clipped, new.stats.clipped)),
            tuple(a - o + n for a, o, n in
                  zip(agg.totals, old.stats.totals, new.stats.totals)),
            agg.cand_len - old.stats.cand_len + new.stats.cand_len,
            agg.ref_len - old.stats.ref_len + new.stats.ref_len)

    # representative gamma per interval, then the interval's BLEU
    proposals: list[tuple[float, float]] = []   # (bleu, gamma)
    if events:
        first = events[0][0]
        proposals.append((bleu_from_stats(agg, pool.max_n, smoothing),
                          first - 1.0))
        i = 0
        while i < len(events):
            gamma = events[i][0]
            while i < len(events) and events[i][0] == gamma:
                _, sent, cand = events[i]
                agg = stats_minus_plus(agg, current[sent], cand)
                current[sent] = cand
                i += 1
            nxt = events[i][0] if i < len(events) else gamma + 2.0
            rep = (gamma + nxt) / 2.0
            proposals.append((bleu_from_stats(agg, pool.max_n, smoothing),
                              rep))
    else:
        proposals.append((bleu_from_stats(agg, pool.max_n, smoothing), 0.0))

    best_bleu, best_gamma = max(proposals, key=lambda p: (p[0], -abs(p[1])))
    # authoritative re-evaluation (envelope ties vs. selection ties)
    shifted = tuple(w + best_gamma * d for w, d in zip(weights, direction))
    actual = pool_bleu(pool, shifted, smoothing)
    baseline = pool_bleu(pool, weights, smoothing)
    if actual <= baseline:
        return 0.0, baseline
    return best_gamma, actual


def optimize_on_pool(pool: KBestPool, init_weights, rng: random.Random,
                     n_restarts: int = 20, n_passes: int = 3,
                     smoothing: bool = True) -> tuple[tuple[float, ...], float]:
    """Coordinate-descent line searches from the current weights and
    random restarts; returns the best (weights, pooled BLEU) seen."""
    starts = [tuple(init_weights)]
    for _ in range(n_restarts):
        starts.append(tuple(rng.uniform(-1.0, 1.0)
                            for _ in range(N_FEATURES)))
    best_w = tuple(init_weights)
    best_b = pool_bleu(pool, best_w, smoothing)
    for start in starts:
        w = start
        current = pool_bleu(pool, w, smoothing)
        for _ in range(n_passes):
            improved = False
            for dim in range(N_FEATURES):
                direction = tuple(1.0 if i == dim else 0.0
                                  for i in range(N_FEATURES))
                gamma, b = line_search(pool, w, direction, smoothing)
                if gamma != 0.0 and b > current + 1e-12:
                    w = tuple(x + gamma * d for x, d in zip(w, direction))
                    current = b
                    improved = True
            if not improved:
                break
        scale = max(abs(x) for x in w)
        if scale > 0:
            w = tuple(x / scale for x in w)
        if current > best_b + 1e-12:
            best_w, best_b = w, current
    return best_w, best_b


def mert(dev, decoder, init_weights=None, k: int = 50, max_iters: int = 10,
         seed: int = 1, n_restarts: int = 20, smoothing: bool = True,
         lowercase: bool = True, tol: float = 1e-4,
         report=None) -> tuple[float, ...]:
    """Tune weights on (graph, reference) pairs.

    decoder(graph, weights, k) must return objects with .tokens and
    .features (the decode k-best).  Stops when pooled BLEU improves by
    less than tol or after max_iters; returns the weight vector with the
    highest 1-best BLEU on the final accumulated pool.
    """
    dev = list(dev)
    if not dev:
        raise ValueError("empty dev set")
    rng = random.Random(seed)
    w = tuple(init_weights) if init_weights is not None \
        else (0.0,) * N_FEATURES
    pool = KBestPool([ref for _, ref in dev], lowercase=lowercase)
    visited = [w]
    prev = None
    for it in range(max_iters):
        for sent, (graph, _) in enumerate(dev):
            for result in decoder(graph, w, k):
                pool.add(sent, tuple(result.tokens), tuple(result.features))
        w, pooled = optimize_on_pool(pool, w, rng, n_restarts,
                                     smoothing=smoothing)
        visited.append(w)
        line = (f"iteration {it + 1}: pool size {pool.size()}, "
                f"pooled 1-best BLEU {pooled:.4f}")
        log.info(line)
        if report is not None:
            report(line)
        if prev is not None and pooled - prev < tol:
            break
        prev = pooled
    # final selection on the final pool guarantees >= the initial weights
    return max(visited, key=lambda cand: pool_bleu(pool, cand, smoothing))
