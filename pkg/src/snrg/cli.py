"""Command-line pipeline: extract, estimate, train-reorder, decode, tune,
eval, stats.

Every subcommand writes files consumable by the next stage.  Relative
model paths that do not exist are also looked up under $SNRG_MODEL_DIR.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import os
import sys

from . import decoder as dec
from . import extract as ext
from . import lm as lm_mod
from . import tuning
from . import reorder as reorder_mod
from .bleu import bleu
from .corpus import filter_by_length, load_corpus
from .graph import parse_penman, serialize_penman, strip_comments
from .rules import (SynchronousRule, derive_nt_alignment, grammar_stats,
                    load_grammar, load_verbalization, parse_fragment,
                    save_grammar)

log = logging.getLogger("snrg")


def _resolve(path):
    if path is None or os.path.exists(path):
        return path
    base = os.environ.get("SNRG_MODEL_DIR")
    if base:
        candidate = os.path.join(base, path)
        if os.path.exists(candidate):
            return candidate
    return path


def _read_graph_blocks(path, max_tokens=0):
    """PENMAN blocks separated by blank lines; corpus files work too.

    With max_tokens > 0, blocks carrying a `# ::snt` line longer than the
    limit are dropped (keeps decode output parallel to filtered
    references)."""
    with open(path, encoding="utf-8") as fh:
        content = fh.read()
    blocks, cur = [], []
    for line in content.splitlines():
        if line.strip() == "":
            if cur:
                blocks.append(cur)
                cur = []
        else:
            cur.append(line)
    if cur:
        blocks.append(cur)
    graphs = []
    for block in blocks:
        if max_tokens:
            snt = next((l.strip()[len("# ::snt"):].strip() for l in block
                        if l.strip().startswith("# ::snt")), None)
            if snt is not None and len(snt.split()) > max_tokens:
                continue
        text = strip_comments("\n".join(block))
        if text.strip():
            graphs.append(parse_penman(text))
    return graphs


def _save_instances(instances, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rule in instances:
            fh.write("%s ||| %s ||| %s ||| %s\n"
                     % (rule.lhs, serialize_penman(rule.frag),
                        " ".join(rule.phrase), rule.kind))


def _load_instances(path):
    instances = []
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split("|||")]
            if len(parts) != 4:
                raise ValueError(f"{path}:{no}: expected 4 '|||' fields")
            lhs, f_text, e_text, kind = parts
            frag = parse_fragment(f_text)
            phrase = tuple(e_text.split())
            instances.append(SynchronousRule(
                lhs, frag, phrase, derive_nt_alignment(frag, phrase), kind))
    return instances


def _decode_config(args) -> dec.DecodeConfig:
    return dec.DecodeConfig(
        no_induced_rule=args.no_induced_rule,
        no_concept_rule=args.no_concept_rule,
        no_moving_distance=args.no_moving_distance,
        no_reorder_model=args.no_reorder_model)


def _add_model_flags(p, with_ablations=True):
    p.add_argument("--grammar", required=True, help="grammar rule file")
    p.add_argument("--lm", default=None, help="ARPA language model (.gz ok)")
    p.add_argument("--reorder", default=None, help="reorder model file")
    p.add_argument("--verbalization", default=None,
                   help="verbalization lexicon for complex concept rules")
    p.add_argument("--beam", type=int, default=100, help="beam size")
    p.add_argument("--k", type=int, default=50, help="k-best list size")
    if with_ablations:
        p.add_argument("--no-induced-rule", action="store_true")
        p.add_argument("--no-concept-rule", action="store_true")
        p.add_argument("--no-moving-distance", action="store_true")
        p.add_argument("--no-reorder-model", action="store_true")


def _load_models(args):
    table = load_grammar(_resolve(args.grammar))
    lm = lm_mod.load_arpa(_resolve(args.lm)) if args.lm else None
    reorder = reorder_mod.load_reorder(_resolve(args.reorder)) \
        if args.reorder else None
    verba = load_verbalization(_resolve(args.verbalization)) \
        if args.verbalization else None
    return table, lm, reorder, verba


def cmd_extract(args) -> int:
    corpus = load_corpus(_resolve(args.corpus), strict=args.strict)
    if args.max_tokens:
        corpus = filter_by_length(corpus, args.max_tokens)
    config = ext.ExtractConfig(max_fragment_nodes=args.max_fragment_nodes,
                               max_absorbed_tokens=args.max_absorbed_tokens)
    instances = ext.induce_grammar(corpus, config)
    _save_instances(instances, args.out)
    print(f"extracted {len(instances)} rule instances "
          f"from {len(corpus)} instances -> {args.out}")
    return 0


def cmd_estimate(args) -> int:
    instances = _load_instances(_resolve(args.instances))
    table = ext.estimate_probabilities(instances)
    save_grammar(table, args.out)
    print(f"estimated {len(table)} rules -> {args.out}")
    return 0


def cmd_train_reorder(args) -> int:
    corpus = load_corpus(_resolve(args.corpus), strict=args.strict)
    model = reorder_mod.train_reorder(corpus)
    reorder_mod.save_reorder(model, args.out)
    print(f"trained reorder model on {len(corpus)} instances -> {args.out}")
    return 0


def cmd_decode(args) -> int:
    table, lm, reorder, verba = _load_models(args)
    weights = dec.load_weights(_resolve(args.weights)) if args.weights \
        else dec.DEFAULT_WEIGHTS
    config = _decode_config(args)
    graphs = _read_graph_blocks(_resolve(args.input), args.max_tokens)

    def run(graph):
        return dec.decode(graph, table, lm, reorder, weights,
                          beam_size=args.beam, k=args.k, config=config,
                          verbalization=verba)

    if args.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(args.threads) as pool:
            all_results = list(pool.map(run, graphs))
    else:
        all_results = [run(g) for g in graphs]

    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for results in all_results:
            out.write(results[0].string + "\n")
    finally:
        if args.output:
            out.close()

    if args.kbest_out:
        with open(args.kbest_out, "w", encoding="utf-8") as fh:
            for sid, results in enumerate(all_results):
                for r in results:
                    feats = " ".join("%.12g" % f for f in r.features)
                    fh.write(f"{sid} ||| {r.string} ||| {feats} ||| "
                             f"{r.score:.12g}\n")
    if args.usage_log:
        with open(args.usage_log, "w", encoding="utf-8") as fh:
            for sid, results in enumerate(all_results):
                for cat in results[0].categories:
                    fh.write(f"{sid}\t{cat}\n")
    return 0


def cmd_tune(args) -> int:
    table, lm, reorder, verba = _load_models(args)
    config = _decode_config(args)
    corpus = load_corpus(_resolve(args.corpus), strict=args.strict)
    corpus = filter_by_length(corpus, args.max_tokens)
    if not corpus:
        print("error: no dev instances after length filtering",
              file=sys.stderr)
        return 1
    dev = [(inst.graph, " ".join(inst.tokens)) for inst in corpus]

    def decoder(graph, weights, k):
        return dec.decode(graph, table, lm, reorder, weights,
                          beam_size=args.beam, k=k, config=config,
                          verbalization=verba)

    init = dec.load_weights(_resolve(args.weights_init)) \
        if args.weights_init else None
    weights = tuning.mert(dev, decoder, init_weights=init, k=args.k,
                            max_iters=args.iters, seed=args.seed,
                            n_restarts=args.restarts,
                            smoothing=not args.no_smoothing,
                            report=print)
    dec.save_weights(weights, args.weights_out)
    print(f"tuned weights -> {args.weights_out}")
    return 0


def cmd_eval(args) -> int:
    with open(args.cand, encoding="utf-8") as fh:
        cands = fh.read().splitlines()
    with open(args.ref, encoding="utf-8") as fh:
        refs = fh.read().splitlines()
    if len(cands) != len(refs):
        print(f"error: {len(cands)} candidates vs {len(refs)} references",
              file=sys.stderr)
        return 1
    score = bleu(cands, refs, smoothing=args.smoothing)
    print(f"{score:.4f}")
    return 0


def cmd_stats(args) -> int:
    table = load_grammar(_resolve(args.grammar))
    usage = None
    if args.usage:
        usage = []
        with open(args.usage, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    usage.append(line.split("\t")[-1])
    report = grammar_stats(table, usage)
    print(f"rules: {report['n_rules']}")
    print("right-hand-side histogram (terminals in F, has nonterminal):")
    for (terms, has_nt), count in sorted(report["rhs_histogram"].items()):
        nt = "with NT" if has_nt else "no NT"
        print(f"  {terms:3d} terminals, {nt:8s}: {count}")
    if "usage" in report:
        print("rules used for decoding:")
        for cat in ("glue", "nonterminal", "terminal"):
            print(f"  {cat:12s}: {100.0 * report['usage'][cat]:.1f}%")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snrg",
        description="graph-to-string generation with a synchronous node "
                    "replacement grammar")
    parser.add_argument("--seed", type=int, default=1,
                        help="seed for all randomized steps")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract rule instances from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-fragment-nodes", type=int, default=5)
    p.add_argument("--max-absorbed-tokens", type=int, default=2)
    p.add_argument("--max-tokens", type=int, default=0,
                   help="drop longer sentences first (0 = keep all)")
    p.add_argument("--no-strict", dest="strict", action="store_false")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("estimate", help="estimate rule probabilities")
    p.add_argument("--instances", required=True,
                   help="raw rule instances from `extract`")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("train-reorder", help="train the reordering model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-strict", dest="strict", action="store_false")
    p.set_defaults(func=cmd_train_reorder)

    p = sub.add_parser("decode", help="generate sentences from AMR graphs")
    _add_model_flags(p)
    p.add_argument("--weights", default=None)
    p.add_argument("--input", required=True,
                   help="PENMAN blocks separated by blank lines")
    p.add_argument("--output", default=None, help="1-best file (default stdout)")
    p.add_argument("--kbest-out", default=None)
    p.add_argument("--usage-log", default=None,
                   help="write per-application rule categories")
    p.add_argument("--threads", type=int, default=1,
                   help="sentence-level parallelism")
    p.add_argument("--max-tokens", type=int, default=30,
                   help="skip corpus records whose ::snt exceeds this "
                        "many tokens (0 = keep all; bare PENMAN blocks "
                        "are always kept)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("tune", help="MERT weight tuning on a dev corpus")
    _add_model_flags(p)
    p.add_argument("--corpus", required=True, help="dev corpus file")
    p.add_argument("--weights-out", required=True)
    p.add_argument("--weights-init", default=None)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-tokens", type=int, default=30)
    p.add_argument("--no-smoothing", action="store_true",
                   help="unsmoothed BLEU as the tuning objective")
    p.add_argument("--no-strict", dest="strict", action="store_false")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("eval", help="corpus BLEU of candidates vs references")
    p.add_argument("--cand", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--smoothing", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="grammar shape and usage statistics")
    p.add_argument("--grammar", required=True)
    p.add_argument("--usage", default=None, help="usage log from decode")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
