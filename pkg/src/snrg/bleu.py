"""Corpus-level BLEU: modified n-gram precision with brevity penalty.

Comparison is lowercased by default and unsmoothed; an optional add-one
smoothing flag exists for tiny test corpora.  Sufficient statistics are
exposed separately so tuning can sweep candidate selections without
re-counting n-grams.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass


def _tokens(text, lowercase: bool) -> tuple[str, ...]:
    if isinstance(text, str):
        text = text.split()
    toks = tuple(text)
    return tuple(t.lower() for t in toks) if lowercase else toks


def _ngram_counts(tokens: tuple[str, ...], n: int) -> Counter:
    return Counter(tokens[i:i + n] for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class BleuStats:
    clipped: tuple[int, ...]
    totals: tuple[int, ...]
    cand_len: int
    ref_len: int

    def __add__(self, other: "BleuStats") -> "BleuStats":
        return BleuStats(
            tuple(a + b for a, b in zip(self.clipped, other.clipped)),
            tuple(a + b for a, b in zip(self.totals, other.totals)),
            self.cand_len + other.cand_len,
            self.ref_len + other.ref_len)


def zero_stats(max_n: int = 4) -> BleuStats:
    return BleuStats((0,) * max_n, (0,) * max_n, 0, 0)


def sentence_stats(candidate, references, max_n: int = 4,
                   lowercase: bool = True) -> BleuStats:
    """Clipped/total n-gram counts and the closest reference length."""
    cand = _tokens(candidate, lowercase)
    refs = [_tokens(r, lowercase) for r in _as_ref_seq(references)]
    clipped, totals = [], []
    for n in range(1, max_n + 1):
        counts = _ngram_counts(cand, n)
        max_ref: Counter = Counter()
        for ref in refs:
            for gram, c in _ngram_counts(ref, n).items():
                if c > max_ref[gram]:
                    max_ref[gram] = c
        clipped.append(sum(min(c, max_ref[g]) for g, c in counts.items()))
        totals.append(max(len(cand) - n + 1, 0))
    ref_len = min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
    return BleuStats(tuple(clipped), tuple(totals), len(cand), ref_len)


def _as_ref_seq(references) -> list[str]:
    # one reference string, or a list of alternative reference strings
    if isinstance(references, str):
        return [references]
    refs = list(references)
    if not refs or not all(isinstance(r, str) for r in refs):
        raise TypeError("references must be a string or a list of strings")
    return refs


def bleu_from_stats(stats: BleuStats, max_n: int = 4,
                    smoothing: bool = False) -> float:
    if stats.cand_len == 0:
        return 0.0
    log_sum = 0.0
    for c, t in zip(stats.clipped, stats.totals):
        if smoothing:
            c, t = c + 1, t + 1
        if c == 0 or t == 0:
            return 0.0
        log_sum += math.log(c / t)
    bp = 1.0 if stats.cand_len > stats.ref_len else \
        math.exp(1.0 - stats.ref_len / stats.cand_len)
    return bp * math.exp(log_sum / max_n)


def bleu(candidates, references, max_n: int = 4, smoothing: bool = False,
         lowercase: bool = True) -> float:
    """Corpus BLEU of parallel candidate/reference lists.

    Each reference entry may be one string or a list of alternatives.
    """
    cands = list(candidates)
    refs = list(references)
    if len(cands) != len(refs):
        raise ValueError("candidate/reference counts differ")
    agg = zero_stats(max_n)
    for cand, ref in zip(cands, refs):
        agg = agg + sentence_stats(cand, ref, max_n, lowercase)
    return bleu_from_stats(agg, max_n, smoothing)
