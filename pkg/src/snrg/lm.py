"""Back-off n-gram language model over the ARPA text format.

Scores are log10 throughout (the ARPA native base).  Hypothesis strings
are scored segment-internally with truncated context during search
(`score_fragment`); complete sentences get the exact boundary-aware score
(`score`).  Out-of-vocabulary words map to the unknown symbol when the
model has one, otherwise they score OOV_LOG10 flat.
"""

from __future__ import annotations

import gzip
import re

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
OOV_LOG10 = -99.0

_COUNT_RE = re.compile(r"ngram (\d+)=(\d+)\Z")


class ArpaFormatError(ValueError):
    def __init__(self, message, line_no=None):
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(where + message)
        self.line_no = line_no


class NGramModel:
    def __init__(self, order: int,
                 entries: dict[tuple[str, ...], tuple[float, float]]):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.entries = entries
        self.vocab = {g[0] for g in entries if len(g) == 1}

    def logprob(self, gram: tuple[str, ...]) -> float | None:
        e = self.entries.get(gram)
        return e[0] if e is not None else None

    def backoff(self, gram: tuple[str, ...]) -> float:
        e = self.entries.get(gram)
        return e[1] if e is not None else 0.0

    def _map_token(self, tok: str) -> str:
        if tok in self.vocab:
            return tok
        return UNK if UNK in self.vocab else tok

    def conditional(self, history: tuple[str, ...], word: str) -> float:
        """Standard back-off lookup of log10 p(word | history)."""
        word = self._map_token(word)
        if word not in self.vocab:
            return OOV_LOG10
        if self.order > 1:
            hist = tuple(self._map_token(t)
                         for t in history[-(self.order - 1):])
        else:
            hist = ()
        total = 0.0
        while True:
            lp = self.logprob(hist + (word,))
            if lp is not None:
                return total + lp
            # word is in vocab, so the unigram lookup always succeeds
            total += self.backoff(hist)
            hist = hist[1:]


def score(model: NGramModel, tokens) -> float:
    """Exact log10 probability of the token sequence as a sentence."""
    seq = [BOS] + list(tokens) + [EOS]
    total = 0.0
    for i in range(1, len(seq)):
        total += model.conditional(tuple(seq[max(0, i - model.order + 1):i]),
                                   seq[i])
    return total


def score_fragment(model: NGramModel, tokens) -> float:
    """Partial score: no boundary symbols, context truncated at the start."""
    seq = list(tokens)
    total = 0.0
    for i in range(len(seq)):
        total += model.conditional(tuple(seq[max(0, i - model.order + 1):i]),
                                   seq[i])
    return total


def load_arpa(path) -> NGramModel:
    """Read an ARPA file (gzip accepted); entry counts must match \\data\\."""
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    counts: dict[int, int] = {}
    entries: dict[tuple[str, ...], tuple[float, float]] = {}
    section = None          # None | "data" | order being read
    seen_end = False
    per_order: dict[int, int] = {}

    for no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "\\data\\":
            section = "data"
            continue
        m = re.match(r"\\(\d+)-grams:\Z", line)
        if m:
            order = int(m.group(1))
            if order not in counts:
                raise ArpaFormatError(
                    f"section \\{order}-grams: not announced in \\data\\", no)
            section = order
            continue
        if line == "\\end\\":
            seen_end = True
            section = None
            continue
        if section == "data":
            cm = _COUNT_RE.match(line)
            if cm is None:
                raise ArpaFormatError(f"bad \\data\\ line: {line!r}", no)
            counts[int(cm.group(1))] = int(cm.group(2))
        elif isinstance(section, int):
            fields = line.split()
            n = section
            if len(fields) == n + 1:
                logp, gram, bow = fields[0], fields[1:], 0.0
            elif len(fields) == n + 2:
                logp, gram, bow = fields[0], fields[1:-1], fields[-1]
            else:
                raise ArpaFormatError(
                    f"expected {n}-gram entry, found {len(fields)} fields", no)
            try:
                entries[tuple(gram)] = (float(logp), float(bow))
            except ValueError as exc:
                raise ArpaFormatError(str(exc), no) from exc
            per_order[n] = per_order.get(n, 0) + 1
        else:
            raise ArpaFormatError(f"content outside any section: {line!r}", no)

    if not counts:
        raise ArpaFormatError("missing \\data\\ header")
    if not seen_end:
        raise ArpaFormatError("missing \\end\\ marker")
    for order, expected in counts.items():
        if per_order.get(order, 0) != expected:
            raise ArpaFormatError(
                f"\\data\\ announces {expected} {order}-grams, "
                f"found {per_order.get(order, 0)}")
    return NGramModel(max(counts), entries)


def save_arpa(model: NGramModel, path) -> None:
    by_order: dict[int, list] = {}
    for gram, (logp, bow) in model.entries.items():
        by_order.setdefault(len(gram), []).append((gram, logp, bow))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\\data\\\n")
        for n in sorted(by_order):
            fh.write(f"ngram {n}={len(by_order[n])}\n")
        for n in sorted(by_order):
            fh.write(f"\n\\{n}-grams:\n")
            for gram, logp, bow in sorted(by_order[n]):
                line = f"{logp:.6f}\t{' '.join(gram)}"
                if bow:
                    line += f"\t{bow:.6f}"
                fh.write(line + "\n")
        fh.write("\n\\end\\\n")
