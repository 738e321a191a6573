"""Graph-to-string transduction with a synchronous node replacement grammar.

Pipeline: induce graph-to-string rules from aligned sentence/AMR pairs,
estimate translation features, then generate from new graphs by collapsing
fragment matches bottom-up under a beam-searched log-linear model, with
MERT tuning and BLEU evaluation on top.
"""

from .bleu import bleu
from .corpus import Instance, filter_by_length, load_corpus
from .decoder import (DEFAULT_WEIGHTS, DecodeConfig, DecodeResult, Hypothesis,
                      apply_rule, compute_features, decode, load_weights,
                      save_weights, score_hypothesis)
from .extract import (ExtractConfig, collapse_rules, estimate_probabilities,
                      extract_initial_rules, induce_grammar, rule_contains)
from .graph import (AmrFragment, AmrGraph, FragmentMatch, PenmanParseError,
                    canonical_form, collapse_match, graph_distance,
                    match_fragment, parse_penman, serialize_penman)
from .lm import NGramModel, load_arpa, score, score_fragment
from .tuning import KBestPool, mert
from .reorder import (ReorderModel, load_reorder, reorder_prob, save_reorder,
                      train_reorder)
from .rules import (RuleTable, SynchronousRule, grammar_stats, load_grammar,
                    make_concept_rules, make_glue_rules, save_grammar)

__version__ = "0.1.0"

__all__ = [
    "AmrFragment", "AmrGraph", "DecodeConfig", "DecodeResult",
    "DEFAULT_WEIGHTS", "ExtractConfig", "FragmentMatch", "Hypothesis",
    "Instance", "KBestPool", "NGramModel", "PenmanParseError", "ReorderModel",
    "RuleTable", "SynchronousRule", "apply_rule", "bleu", "canonical_form",
    "collapse_match", "collapse_rules", "compute_features", "decode",
    "estimate_probabilities", "extract_initial_rules", "filter_by_length",
    "grammar_stats", "graph_distance", "induce_grammar", "load_arpa",
    "load_corpus", "load_grammar", "load_reorder", "load_weights",
    "make_concept_rules", "make_glue_rules", "match_fragment", "mert",
    "parse_penman", "reorder_prob", "rule_contains", "save_grammar",
    "save_reorder", "save_weights", "score", "score_fragment",
    "score_hypothesis", "serialize_penman", "train_reorder",
]
