"""ARPA loading and back-off scoring against an independent reference."""

import gzip
import math
import random

import pytest

from snrg.lm import (ArpaFormatError, NGramModel, load_arpa, score,
                     score_fragment)

import oracles

TINY_ARPA = """\
\\data\\
ngram 1=5
ngram 2=2

\\1-grams:
-0.60206\t</s>
-99\t<s>\t-0.30103
-0.60206\ta\t-0.30103
-0.90309\tb
-0.90309\tc

\\2-grams:
-0.30103\t<s> a
-0.52288\ta b

\\end\\
"""

TRAIN_SENTENCES = [
    "the boy wants to go".split(),
    "the girl wants to see the dog".split(),
    "a dog sees the boy".split(),
    "the boy sees a girl".split(),
    "a girl wants the dog".split(),
]


@pytest.fixture(scope="module")
def bigram_arpa_text():
    return oracles.build_bigram_arpa(TRAIN_SENTENCES)


@pytest.fixture(scope="module")
def bigram_model(bigram_arpa_text, tmp_path_factory):
    path = tmp_path_factory.mktemp("lm") / "model.arpa"
    path.write_text(bigram_arpa_text, encoding="utf-8")
    return load_arpa(path)


class TestLoadArpa:
    def test_header_echo(self, tmp_path):
        path = tmp_path / "tiny.arpa"
        path.write_text(TINY_ARPA, encoding="utf-8")
        model = load_arpa(path)
        assert model.order == 2
        assert len(model.entries) == 7
        assert model.logprob(("a", "b")) == pytest.approx(-0.52288)

    def test_missing_end_marker(self, tmp_path):
        path = tmp_path / "bad.arpa"
        path.write_text(TINY_ARPA.replace("\\end\\", ""), encoding="utf-8")
        with pytest.raises(ArpaFormatError):
            load_arpa(path)

    def test_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.arpa"
        path.write_text(TINY_ARPA.replace("ngram 1=5", "ngram 1=6"),
                        encoding="utf-8")
        with pytest.raises(ArpaFormatError):
            load_arpa(path)

    def test_unannounced_section(self, tmp_path):
        path = tmp_path / "bad.arpa"
        path.write_text(TINY_ARPA.replace("ngram 2=2\n", ""),
                        encoding="utf-8")
        with pytest.raises(ArpaFormatError):
            load_arpa(path)

    def test_gzip_input(self, tmp_path, bigram_arpa_text):
        path = tmp_path / "model.arpa.gz"
        with gzip.open(path, "wt", encoding="utf-8") as fh:
            fh.write(bigram_arpa_text)
        model = load_arpa(path)
        assert model.order == 2


class TestScore:
    def test_empty_sequence_is_boundary_only(self, tmp_path):
        path = tmp_path / "tiny.arpa"
        path.write_text(TINY_ARPA, encoding="utf-8")
        model = load_arpa(path)
        # p(</s> | <s>) backs off: bow(<s>) + p(</s>)
        assert score(model, []) == pytest.approx(-0.30103 + -0.60206)

    def test_unigram_only_additivity(self, tmp_path):
        text = ("\\data\\\nngram 1=4\n\n\\1-grams:\n"
                "-0.6\t</s>\n-99\t<s>\n-0.3\ta\n-0.7\tb\n\n\\end\\\n")
        path = tmp_path / "uni.arpa"
        path.write_text(text, encoding="utf-8")
        model = load_arpa(path)
        assert score(model, ["a", "b"]) == pytest.approx(-0.3 - 0.7 - 0.6)

    def test_matches_reference_scorer_50_sentences(self, bigram_arpa_text,
                                                   bigram_model):
        rng = random.Random(4)
        vocab = sorted({w for s in TRAIN_SENTENCES for w in s})
        for _ in range(50):
            n = rng.randint(1, 9)
            toks = [rng.choice(vocab + ["zebra", "quux"]) for _ in range(n)]
            got = score(bigram_model, toks)
            want = oracles.reference_sentence_score(bigram_arpa_text, toks)
            assert got == pytest.approx(want, abs=1e-4)

    def test_unknown_maps_to_unk(self, bigram_model):
        known = score(bigram_model, ["zebra"])
        assert known == score(bigram_model, ["quux"])  # both via <unk>

    def test_conditionals_sum_to_one(self, bigram_model):
        # closed-vocabulary histories: sum_w p(w|h) == 1
        vocab = sorted(bigram_model.vocab - {"<s>"})
        for hist in ["the", "boy", "<s>", "wants"]:
            total = sum(10.0 ** bigram_model.conditional((hist,), w)
                        for w in vocab)
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_fragment_scoring_truncates_context(self, bigram_model):
        frag = score_fragment(bigram_model, ["boy", "wants"])
        expect = bigram_model.conditional((), "boy") + \
            bigram_model.conditional(("boy",), "wants")
        assert frag == pytest.approx(expect)

    def test_score_additive_over_conditionals(self, bigram_model):
        toks = ["the", "boy", "wants"]
        total = bigram_model.conditional((), "<s>") * 0
        seq = ["<s>"] + toks + ["</s>"]
        for i in range(1, len(seq)):
            total += bigram_model.conditional(tuple(seq[:i]), seq[i])
        assert score(bigram_model, toks) == pytest.approx(total)
