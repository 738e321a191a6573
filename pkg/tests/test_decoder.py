"""Beam-search decoding: features, rule application, search correctness."""

import math
import random

import pytest

from snrg.decoder import (DEFAULT_WEIGHTS, DecodeConfig, apply_rule,
                          compute_features, decode, decode_rules, finalize,
                          initial_hypothesis, load_weights, replay,
                          save_weights, score_hypothesis)
from snrg.extract import estimate_probabilities, induce_grammar
from snrg.graph import AmrGraph, match_fragment, parse_fragment, parse_penman
from snrg.reorder import ReorderModel
from snrg.rules import RuleTable

import oracles
from conftest import make_rule, random_graph, table_of, TABLE1_RULES

TRANS_ONLY = (1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)


class TestScoreHypothesis:
    def test_zero_weights(self):
        assert score_hypothesis((1.0,) * 9, (0.0,) * 9) == 0.0

    def test_one_hot_rule_count(self):
        feats = (0, 0, 0, 0, 0, 0, 3.0, 0, 0)
        weights = (0, 0, 0, 0, 0, 0, 1.0, 0, 0)
        assert score_hypothesis(feats, weights) == 3.0

    def test_random_dot_product(self):
        rng = random.Random(1)
        for _ in range(20):
            f = [rng.uniform(-5, 5) for _ in range(9)]
            w = [rng.uniform(-5, 5) for _ in range(9)]
            expect = sum(a * b for a, b in zip(w, f))
            assert score_hypothesis(tuple(f), tuple(w)) == \
                pytest.approx(expect, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            score_hypothesis((1.0,), (1.0, 2.0))


class TestComputeFeatures:
    def test_first_application_zero_moving_distance(self, figure2_graph):
        rule = make_rule("(b / boy)", "the boy")
        hyp = initial_hypothesis(figure2_graph)
        m = match_fragment(figure2_graph, rule.frag)[0]
        delta, tokens = compute_features(rule, m, hyp, figure2_graph)
        assert delta[8] == 0.0
        assert tokens == ("the", "boy")
        assert delta[5] == 2.0 and delta[6] == 1.0

    def test_moving_distance_boy_to_want(self, figure2_graph):
        rule_a = make_rule("(b / boy)", "the boy")
        rule_b = make_rule("(w / want-01 :ARG0 (X / #X1#))", "#X1# wants",
                           "induced-collapsed")
        hyp = initial_hypothesis(figure2_graph)
        m = match_fragment(figure2_graph, rule_a.frag)[0]
        hyp = apply_rule(hyp, 0, rule_a, m, figure2_graph, TRANS_ONLY)
        m2 = match_fragment(hyp.graph, rule_b.frag)[0]
        delta, _ = compute_features(rule_b, m2, hyp, figure2_graph)
        # distance(boy, want-01) in the original graph
        assert delta[8] == 1.0

    def test_glue_reorder_log(self):
        # p(I | ARG0) = (1+2)/(2+1+2) = 0.6
        model = ReorderModel()
        model.add("h", "ARG0", "t", "M", 1.0)
        model.add("h", "ARG0", "t", "I", 2.0)
        g = AmrGraph(("#X1#", "#X2#"), ((0, "ARG0", 1),), 0,
                     {0: ("a",), 1: ("b",)})
        from snrg.rules import make_glue_rules
        r2 = next(r for r in make_glue_rules({"ARG0"})
                  if r.phrase == ("#X2#", "#X1#"))
        hyp = initial_hypothesis(g)
        m = match_fragment(g, r2.frag)[0]
        delta, tokens = compute_features(r2, m, hyp, g, reorder_model=model)
        assert delta[7] == pytest.approx(math.log(0.6), abs=1e-12)
        assert tokens == ("b", "a")

    def test_non_glue_reorder_zero(self, figure2_graph):
        model = ReorderModel()
        model.add("want-01", "ARG0", "boy", "I", 5.0)
        rule = make_rule("(b / boy)", "the boy")
        hyp = initial_hypothesis(figure2_graph)
        m = match_fragment(figure2_graph, rule.frag)[0]
        delta, _ = compute_features(rule, m, hyp, figure2_graph,
                                    reorder_model=model)
        assert delta[7] == 0.0


class TestApplyRule:
    def test_figure2_sequence(self, figure2_graph, table1):
        rules = table1.rules
        hyp = initial_hypothesis(figure2_graph)
        m = match_fragment(figure2_graph, rules[0].frag)[0]   # (a)
        hyp = apply_rule(hyp, 0, rules[0], m, figure2_graph, TRANS_ONLY)
        assert list(hyp.graph.attachments.values()) == [("the", "boy")]
        m = match_fragment(hyp.graph, rules[1].frag)[0]       # (b)
        hyp = apply_rule(hyp, 1, rules[1], m, figure2_graph, TRANS_ONLY)
        assert list(hyp.graph.attachments.values()) == \
            [("the", "boy", "wants")]
        m = match_fragment(hyp.graph, rules[2].frag)[0]       # (c)
        hyp = apply_rule(hyp, 2, rules[2], m, figure2_graph, TRANS_ONLY)
        assert hyp.graph.n_nodes == 1 and hyp.graph.n_edges == 0
        assert hyp.joined() == ("the", "boy", "wants", "to", "go")

    def test_coverage_strictly_increases(self, figure2_graph, table1):
        results = decode(figure2_graph, table1, weights=TRANS_ONLY,
                         beam_size=20, k=10)
        for result in results:
            hyp = initial_hypothesis(figure2_graph)
            rules = decode_rules(table1, figure2_graph)
            last = -1
            for rid, m in result.derivation:
                hyp = apply_rule(hyp, rid, rules[rid], m, figure2_graph,
                                 TRANS_ONLY)
                assert sum(hyp.coverage) > last
                last = sum(hyp.coverage)


class TestDecode:
    def test_figure2_one_best(self, figure2_graph, table1):
        results = decode(figure2_graph, table1, weights=TRANS_ONLY, k=3)
        assert results[0].string == "the boy wants to go"

    def test_single_node_concept_only(self):
        g = parse_penman("(h / hello)")
        results = decode(g, RuleTable(), weights=DEFAULT_WEIGHTS, k=1)
        assert results[0].string == "hello"
        assert results[0].categories == ("terminal",)

    def test_no_induced_rule_still_outputs(self, figure2_graph, table1):
        config = DecodeConfig(no_induced_rule=True)
        results = decode(figure2_graph, table1, weights=DEFAULT_WEIGHTS,
                         config=config, k=2)
        assert results[0].tokens
        assert all(cat in ("glue", "terminal")
                   for cat in results[0].categories)

    def test_no_moving_distance_feature_zero(self, figure2_graph, table1):
        config = DecodeConfig(no_moving_distance=True)
        for r in decode(figure2_graph, table1, weights=DEFAULT_WEIGHTS,
                        config=config, k=10):
            assert r.features[8] == 0.0

    def test_no_reorder_feature_zero(self, figure2_graph, table1):
        model = ReorderModel()
        model.add("want-01", "ARG0", "boy", "I", 3.0)
        config = DecodeConfig(no_reorder_model=True)
        for r in decode(figure2_graph, table1, reorder_model=model,
                        weights=DEFAULT_WEIGHTS, config=config, k=10):
            assert r.features[7] == 0.0

    def test_pair_beam_index_same_one_best(self, figure2_graph, table1):
        a = decode(figure2_graph, table1, weights=TRANS_ONLY, k=1)
        b = decode(figure2_graph, table1, weights=TRANS_ONLY, k=1,
                   config=DecodeConfig(pair_beam_index=True))
        assert a[0].string == b[0].string
        assert a[0].score == pytest.approx(b[0].score, abs=1e-12)

    def test_lm_feature_exactly_rescored(self, figure2_graph, table1):
        from snrg.lm import load_arpa, score as lm_score
        arpa = oracles.build_bigram_arpa(
            [["the", "boy", "wants", "to", "go"]])
        import tempfile, os
        fd, path = tempfile.mkstemp(suffix=".arpa")
        with os.fdopen(fd, "w") as fh:
            fh.write(arpa)
        try:
            model = load_arpa(path)
            weights = (1, 1, 1, 1, 0.5, 0, 0, 0, 0)
            for r in decode(figure2_graph, table1, lm=model,
                            weights=weights, k=5):
                assert r.features[4] == pytest.approx(
                    lm_score(model, r.tokens), abs=1e-12)
        finally:
            os.unlink(path)

    def test_k_limits_results(self, figure2_graph, table1):
        assert len(decode(figure2_graph, table1, weights=TRANS_ONLY,
                          k=1)) == 1

    def test_invalid_args(self, figure2_graph, table1):
        with pytest.raises(ValueError):
            decode(figure2_graph, table1, beam_size=0)
        with pytest.raises(ValueError):
            decode(figure2_graph, table1, k=0)


class TestTracebackReplay:
    def test_replay_reproduces_exactly(self, figure2_graph, table1):
        weights = (1, 1, 1, 1, 0, 0.3, -0.2, 1, -0.5)
        model = ReorderModel()
        model.add("want-01", "ARG0", "boy", "I", 2.0)
        results = decode(figure2_graph, table1, reorder_model=model,
                         weights=weights, k=10)
        rules = decode_rules(table1, figure2_graph)
        for result in results:
            again = replay(figure2_graph, rules, result.derivation, weights,
                           reorder_model=model)
            assert again.tokens == result.tokens
            assert again.features == result.features
            assert again.score == result.score


class TestExhaustiveEquivalence:
    @pytest.mark.parametrize("seed", range(6))
    def test_unbounded_beam_matches_enumeration(self, seed):
        rng = random.Random(seed)
        g = random_graph(rng, max_nodes=5)
        table = RuleTable()
        # a few induced-style rules over labels that occur in g
        for v in range(g.n_nodes):
            if rng.random() < 0.5:
                table.add(make_rule(
                    f"(n / {g.nodes[v]})",
                    g.nodes[v].split("-")[0] + "x",
                    "induced-initial",
                    (rng.uniform(0.2, 1.0),) * 4))
        model = ReorderModel()
        for lab in ("ARG0", "ARG1", "mod"):
            if rng.random() < 0.7:
                model.add("h", lab, "t", rng.choice(["M", "I"]),
                          float(rng.randint(1, 4)))
        weights = (1, 1, 0.5, 0.5, 0, rng.uniform(-0.5, 0.5),
                   rng.uniform(-0.5, 0.5), 1, rng.choice([0.0, -0.7]))
        config = DecodeConfig()
        results = decode(g, table, reorder_model=model, weights=weights,
                         beam_size=None, k=1, config=config)
        rules = decode_rules(table, g, config)
        best = oracles.enumerate_best_score(g, rules, weights,
                                            reorder_counts=model.counts)
        assert results[0].score == pytest.approx(best, abs=1e-9)


class TestGlueCompleteness:
    @pytest.mark.parametrize("seed", range(10))
    def test_concept_glue_always_derive(self, seed):
        rng = random.Random(1000 + seed)
        g = random_graph(rng, max_nodes=10)
        config = DecodeConfig(no_induced_rule=True)
        results = decode(g, RuleTable(), weights=DEFAULT_WEIGHTS,
                         beam_size=20, k=1, config=config)
        assert results[0].tokens


class TestNoConceptRuleFallback:
    def test_partial_concatenation(self):
        # only "boy" is coverable; want-01 and the edge are not
        g = parse_penman("(w / want-01 :ARG0 (b / boy))")
        table = table_of([("(b / boy)", "the boy", "induced-initial")])
        config = DecodeConfig(no_concept_rule=True)
        results = decode(g, table, weights=TRANS_ONLY, config=config, k=1)
        assert results[0].string == "the boy"

    def test_untranslatable_graph_empty_output(self):
        g = parse_penman("(z / zork)")
        config = DecodeConfig(no_concept_rule=True)
        results = decode(g, RuleTable(), weights=TRANS_ONLY, config=config,
                         k=1)
        assert results[0].string == ""


class TestWeightsIO:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "weights.txt"
        w = (0.1, -0.2, 0.3, 0.4, 1.0, -0.05, 0.07, 0.9, -1.1)
        save_weights(w, path)
        assert load_weights(path) == pytest.approx(w, abs=1e-12)
        header = path.read_text().splitlines()[0]
        assert header.startswith("#") and "moving_distance" in header

    def test_wrong_dimension(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 2 3\n")
        with pytest.raises(ValueError):
            load_weights(path)
