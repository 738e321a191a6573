"""Smoothed monotonic/inverse orientation model over edge labels.

For every edge whose head and tail concepts both align to tokens, the
orientation is monotonic (M) when the head's earliest aligned token does
not follow the tail's, inverse (I) otherwise.  The probability uses +1/+2
smoothed counts marginalized over head and tail concepts, so it is
effectively conditioned on the edge label; a strict per-triple variant is
available behind a flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Instance

MONOTONIC = "M"
INVERSE = "I"


@dataclass
class ReorderModel:
    counts: dict[tuple[str, str, str, str], float] = field(default_factory=dict)
    _label_marginals: dict[str, tuple[float, float]] = field(
        default_factory=dict, repr=False)

    def add(self, head: str, label: str, tail: str, orientation: str,
            count: float = 1.0) -> None:
        key = (head, label, tail, orientation)
        self.counts[key] = self.counts.get(key, 0.0) + count
        self._label_marginals.pop(label, None)

    def _marginals(self, label: str) -> tuple[float, float]:
        cached = self._label_marginals.get(label)
        if cached is None:
            m = sum(c for (h, l, t, o), c in self.counts.items()
                    if l == label and o == MONOTONIC)
            i = sum(c for (h, l, t, o), c in self.counts.items()
                    if l == label and o == INVERSE)
            cached = (m, i)
            self._label_marginals[label] = cached
        return cached


def train_reorder(corpus: list[Instance]) -> ReorderModel:
    """Count orientations over all doubly-aligned edges; ties count as M."""
    model = ReorderModel()
    for inst in corpus:
        pos = inst.node_positions()
        for s, lab, t in inst.graph.edges:
            if s not in pos or t not in pos:
                continue
            o = MONOTONIC if pos[s] <= pos[t] else INVERSE
            model.add(inst.graph.nodes[s], lab, inst.graph.nodes[t], o)
    return model


def reorder_prob(model: ReorderModel, head: str, label: str, tail: str,
                 orientation: str, strict_triple: bool = False) -> float:
    """Smoothed orientation probability; 0.5 for anything unseen."""
    if strict_triple:
        m = model.counts.get((head, label, tail, MONOTONIC), 0.0)
        i = model.counts.get((head, label, tail, INVERSE), 0.0)
    else:
        m, i = model._marginals(label)
    p_mono = (1.0 + m) / (2.0 + m + i)
    if orientation == MONOTONIC:
        return p_mono
    if orientation == INVERSE:
        return 1.0 - p_mono
    raise ValueError(f"unknown orientation {orientation!r}")


def save_reorder(model: ReorderModel, path) -> None:
    """Tab-separated lines: head, label, tail, monotonic and inverse counts."""
    pairs: dict[tuple[str, str, str], list[float]] = {}
    for (h, l, t, o), c in model.counts.items():
        cell = pairs.setdefault((h, l, t), [0.0, 0.0])
        cell[0 if o == MONOTONIC else 1] += c
    with open(path, "w", encoding="utf-8") as fh:
        for (h, l, t) in sorted(pairs):
            m, i = pairs[(h, l, t)]
            fh.write(f"{h}\t{l}\t{t}\t{m:.12g}\t{i:.12g}\n")


def load_reorder(path) -> ReorderModel:
    model = ReorderModel()
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise ValueError(f"line {no}: expected 5 tab-separated fields")
            h, l, t, m, i = parts
            if float(m):
                model.add(h, l, t, MONOTONIC, float(m))
            if float(i):
                model.add(h, l, t, INVERSE, float(i))
    return model
