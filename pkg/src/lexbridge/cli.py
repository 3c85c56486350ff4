"""Batch command-line front end.

Every subcommand validates inputs, derives all randomness from explicit
seeds, and exits 0 on success, 1 on runtime errors (one machine-parsable
line on stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

import numpy as np

from . import bridge as bridge_mod
from . import data, evaluation, features as features_mod, retrieval, taskgen, toyenc, training
from .errors import LexBridgeError, ValidationError
from .tensorfile import read_tensor
from .types import RetrievalRun, Vocabulary


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LexBridgeError as exc:
        print(f"error[{type(exc).__name__}] {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[IOError] {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexbridge",
        description="Lexical enhancement of dense retrieval embeddings.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a synthetic corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--words", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("gen-tasks", help="generate keyword or span queries + qrels")
    p.add_argument("--corpus", required=True)
    p.add_argument("--task", choices=["keyword", "pop"], required=True)
    p.add_argument("--span-lengths", default="16,32,64,128,256",
                   help="comma-separated subset of 16,32,64,128,256 (pop only)")
    p.add_argument("--mode", choices=["tfidf_surrogate", "import"],
                   default="tfidf_surrogate")
    p.add_argument("--import-file", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_tasks)

    p = sub.add_parser("featurize", help="precompute features for corpus + queries")
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--encoder", choices=["toy", "import"], default="toy")
    p.add_argument("--vocab", default=None, help="vocabulary terms file (toy encoder)")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--passage-side", action="store_true",
                   help="also write passage-side token/cls/hidden features")
    p.add_argument("--import-dir", default=None,
                   help="existing feature directory to validate/copy (encoder=import)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train-bridge", help="train bridge parameters")
    p.add_argument("--features", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--config", default=None, help="JSON training config")
    p.add_argument("--strategy", choices=list(bridge_mod.STRATEGIES), default=None)
    p.add_argument("--head-mode", choices=list(bridge_mod.HEAD_MODES), default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_bridge)

    p = sub.add_parser("build-index", help="build a dense index")
    p.add_argument("--embeddings", required=True, help="tensor file of passage embeddings")
    p.add_argument("--ids", required=True, help="passage id list file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("search", help="run top-k retrieval and write a TREC run file")
    p.add_argument("--index", default=None, help="index directory (defaults to features)")
    p.add_argument("--features", required=True, dest="queries_features",
                   help="feature directory for the queries (and passages)")
    p.add_argument("--bridge", default=None, help="trained bridge directory")
    p.add_argument("--strategy", choices=list(bridge_mod.STRATEGIES), default=None)
    p.add_argument("--head-mode", choices=list(bridge_mod.HEAD_MODES), default=None)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--tag", default="lexbridge")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="score a run file against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--ks", default="1,10")
    p.add_argument("--out", required=True, help="report path prefix")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grad-check", help="verify analytic gradients vs finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", default="16x64,32x256",
                   help="comma-separated d x m instances, e.g. 16x64,32x256")
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--group", type=int, default=4)
    p.add_argument("--strategies", default="slr,llr,clr")
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_grad_check)
    return parser


def cmd_gen_corpus(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    shape = toyenc.CorpusShape()
    config = toyenc.ToyEncoderConfig(
        vocab_size=toyenc.synthetic_vocab_size(args.n, shape), dim=2, seed=args.seed)
    passages, _, vocab = toyenc.make_synthetic_corpus(args.n, args.words, config, shape)
    data.write_corpus(out / "corpus.jsonl", passages)
    data.write_id_list(out / "vocab.txt", vocab.terms)
    (out / "meta.json").write_text(json.dumps({
        "n": args.n, "words": args.words, "seed": args.seed,
        "vocab_size": vocab.size}) + "\n")
    print(f"wrote {len(passages)} passages to {out / 'corpus.jsonl'}")
    return 0


def cmd_gen_tasks(args) -> int:
    corpus = data.load_corpus(args.corpus)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.task == "pop":
        lengths = [int(s) for s in args.span_lengths.split(",") if s]
        result = taskgen.gen_pop_queries(corpus, lengths, seed=args.seed)
    else:
        result = taskgen.gen_keyword_queries(
            corpus, seed=args.seed, mode=args.mode, import_path=args.import_file)
    data.write_queries(out / "queries.jsonl", result.queries, extras=result.extras)
    data.write_qrels(out / "qrels.tsv", result.qrels)
    (out / "summary.json").write_text(json.dumps({
        "generated": len(result.queries), "skipped": result.skipped}) + "\n")
    print(f"wrote {len(result.queries)} queries to {out / 'queries.jsonl'} "
          f"(skipped: {result.skipped})")
    return 0


def cmd_featurize(args) -> int:
    out_dir = Path(args.out_dir)
    if args.encoder == "import":
        src = Path(args.import_dir or out_dir)
        features_mod.load_features(src)  # validation
        if src.resolve() != out_dir.resolve():
            out_dir.mkdir(parents=True, exist_ok=True)
            for item in src.iterdir():
                if item.is_file():
                    shutil.copy2(item, out_dir / item.name)
        print(f"validated feature directory {src}")
        return 0
    if args.vocab is None:
        raise ValidationError("toy encoder requires --vocab")
    corpus = data.load_corpus(args.corpus)
    queries = data.load_query_texts(args.queries)
    terms = data.read_id_list(args.vocab)
    vocab = Vocabulary(size=len(terms), terms=tuple(terms))
    config = toyenc.ToyEncoderConfig(vocab_size=vocab.size, dim=args.dim, seed=args.seed)
    manifest = features_mod.featurize_toy(
        corpus, queries, vocab, config, out_dir, passage_side=args.passage_side)
    print(f"featurized {manifest['counts']['passages']} passages, "
          f"{manifest['counts']['queries']} queries into {out_dir}")
    return 0


def _load_training_config(args) -> training.TrainingConfig:
    raw = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
    if args.strategy:
        raw["strategy"] = args.strategy
    if args.head_mode:
        raw["head_mode"] = args.head_mode
    return training.TrainingConfig(**raw)


def cmd_train_bridge(args) -> int:
    config = _load_training_config(args)
    features = features_mod.load_features(args.features)
    qrels = data.read_qrels(args.qrels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    passage_side = config.head_mode in ("passage_only", "both")
    examples = features_mod.assemble_training_examples(
        features, qrels, group_size=config.group_size, seed=config.seed,
        passage_side=passage_side)
    init = training.init_bridge_params(
        features.dim, features.vocab_size, seed=config.seed, strategy=config.strategy)

    def checkpoint(step: int, params) -> None:
        bridge_mod.save_bridge(out / "checkpoints" / f"step-{step:08d}", params,
                               config.strategy, config.head_mode)

    params, log = training.train_bridge(
        examples, config, init_params=init, checkpoint_fn=checkpoint)
    bridge_mod.save_bridge(out, params, config.strategy, config.head_mode)
    with open(out / "loss.csv", "w", encoding="utf-8") as fh:
        fh.write("step,loss\n")
        for step, loss in log:
            fh.write(f"{step},{loss:.12g}\n")
    print(f"trained {config.strategy} bridge for {config.epochs} epochs "
          f"({len(log)} steps) into {out}")
    return 0


def cmd_build_index(args) -> int:
    embeddings = read_tensor(args.embeddings)
    ids = data.read_id_list(args.ids)
    index = retrieval.build_index(ids, embeddings)
    retrieval.save_index(args.out, index)
    print(f"indexed {len(index)} passages into {args.out}")
    return 0


def cmd_search(args) -> int:
    features = features_mod.load_features(args.queries_features)
    params = None
    manifest = {}
    if args.bridge:
        params, manifest = bridge_mod.load_bridge(args.bridge)
    strategy = args.strategy or manifest.get("strategy", "baseline")
    head_mode = args.head_mode or manifest.get("head_mode", "query_only")
    if strategy != "baseline" and params is None:
        raise ValidationError(f"strategy {strategy!r} requires --bridge")

    if strategy != "baseline" and head_mode in ("passage_only", "both"):
        vectors = np.stack([
            bridge_mod.encode_passage(features.passage_features(pid), strategy, head_mode, params)
            for pid in features.passage_ids])
        index = retrieval.build_index(features.passage_ids, vectors)
    elif args.index:
        index = retrieval.load_index(args.index)
    else:
        index = retrieval.build_index(features.passage_ids, features.passages_dense)

    queries = np.stack([
        bridge_mod.encode_query(features.query_features(qid), strategy, head_mode, params)
        for qid in features.query_ids])
    ranked = retrieval.search_many(index, queries, args.k, threads=args.threads)
    run = RetrievalRun({qid: tuple(rows) for qid, rows in zip(features.query_ids, ranked)})
    data.write_run(args.out, run, tag=args.tag)
    print(f"wrote run for {len(features.query_ids)} queries to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    run = data.read_run(args.run)
    qrels = data.read_qrels(args.qrels)
    ks = [int(k) for k in args.ks.split(",") if k]
    report = evaluation.evaluate_run(run, qrels, ks)
    evaluation.write_report(args.out, report)
    print(report.to_table(), end="")
    return 0


def cmd_grad_check(args) -> int:
    strategies = tuple(s for s in args.strategies.split(",") if s)
    failed = False
    for spec_str in args.dims.split(","):
        d_str, m_str = spec_str.lower().split("x")
        d, m = int(d_str), int(m_str)
        report = training.gradient_check(
            d, m, args.batch, args.group, strategies=strategies,
            seed=args.seed, h=args.h)
        for strategy, tensors in report.items():
            for tensor, err in tensors.items():
                status = "ok" if err <= args.tol else "FAIL"
                if err > args.tol:
                    failed = True
                print(f"d={d} m={m} {strategy} {tensor}: "
                      f"max_rel_err={err:.3e} [{status}]")
    return 1 if failed else 0
