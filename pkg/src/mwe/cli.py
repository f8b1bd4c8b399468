"""``mwe`` command line: extract, build-vocab, train, eval-sp, eval-ws, export, info, verify, sweep, synth."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import __version__
from .corpus import DEFAULT_RELATIONS, encode_corpus, extract_tuples, read_conllu, read_tuples, write_tuples
from .evaluate import COMBINERS, eval_sp, eval_ws, read_sp_dataset, read_ws_dataset, write_sp_dataset
from .model import multi_prototype_count, param_count
from .oracle import SynthSpec, gradient_suite, synth_corpus
from .persistence import export_text, load_checkpoint, read_header, save_checkpoint
from .trainer import TrainConfig, parse_lambda_mode, train
from .vocab import DEFAULT_MIN_COUNT, build_vocab, save_relations, save_vocab

logger = logging.getLogger("mwe")

PRESETS = {
    "full": {"dim": 300, "local_dim": 10, "drift": 1.0, "scale_k": 0.8, "eta0": 0.025, "epochs": 5},
    "desk": {"dim": 32, "local_dim": 4, "drift": 1.0, "scale_k": 0.8, "eta0": 0.075, "epochs": 6},
}
TRAIN_DEFAULTS = {
    "relations": ",".join(DEFAULT_RELATIONS), "lambda_mode": "alt", "seed": 0, "workers": 1,
    "min_count": DEFAULT_MIN_COUNT, "neg_uniform": False, "project_u_only": False,
    "count_cap": None, "preset": "full",
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """argparse with usage errors reported as exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _csv(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def _add_train_flags(p):
    g = p.add_argument_group("training")
    g.add_argument("--relations", default=None, help="comma-separated deprel names (default nsubj,dobj,amod)")
    g.add_argument("--dim", type=int, default=None, help="center dimension d")
    g.add_argument("--local-dim", type=int, default=None, help="local dimension s")
    g.add_argument("--drift", type=float, default=None, help="drift bound a")
    g.add_argument("--scale-k", type=float, default=None, help="projection target k (fraction of a)")
    g.add_argument("--epochs", type=int, default=None)
    g.add_argument("--eta0", type=float, default=None, help="initial learning rate")
    g.add_argument("--lambda", dest="lambda_mode", default=None, metavar="{alt|fixed:x}",
                   help="alternating schedule or a fixed center weight")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--workers", type=int, default=None, help="lock-free worker threads (env MWE_THREADS)")
    g.add_argument("--min-count", type=int, default=None)
    g.add_argument("--count-cap", type=int, default=None, help="max visits per record per epoch")
    g.add_argument("--neg-uniform", action="store_const", const=True, default=None,
                   help="uniform negatives over the slot support")
    g.add_argument("--project-u-only", action="store_const", const=True, default=None,
                   help="enforce the drift bound by rescaling u alone")
    g.add_argument("--preset", choices=sorted(PRESETS), default=None)
    g.add_argument("--config", default=None, help="flat key=value file; flags override it")


CONFIG_KEYS = {
    "relations": str, "dim": int, "local_dim": int, "drift": float, "scale_k": float, "epochs": int,
    "eta0": float, "lambda_mode": str, "lambda": str, "seed": int, "workers": int, "min_count": int,
    "count_cap": int, "neg_uniform": "bool", "project_u_only": "bool", "preset": str,
}


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (x.strip() for x in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown setting {key!r}")
            kind = CONFIG_KEYS[key]
            if key == "lambda":
                key = "lambda_mode"
            try:
                out[key] = _parse_bool(value) if kind == "bool" else kind(value)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def resolve_training(args) -> dict:
    """Merge flags > config file > preset > defaults; echo the result to stderr."""
    config = read_config(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in TRAIN_DEFAULTS.keys() | PRESETS["full"].keys()
             if getattr(args, k, None) is not None}
    preset = flags.get("preset") or config.get("preset") or TRAIN_DEFAULTS["preset"]
    eff = dict(TRAIN_DEFAULTS)
    eff.update(PRESETS[preset])
    if os.environ.get("MWE_THREADS"):
        eff["workers"] = int(os.environ["MWE_THREADS"])
    eff.update(config)
    eff.update(flags)
    eff["preset"] = preset
    eff["relations"] = _csv(eff["relations"]) if isinstance(eff["relations"], str) else eff["relations"]
    eff["lambda_mode"] = parse_lambda_mode(eff["lambda_mode"])
    for key in sorted(eff):
        value = ",".join(eff[key]) if key == "relations" else eff[key]
        print(f"# {key}\t{value}", file=sys.stderr)
    return eff


def make_config(eff: dict, **override) -> TrainConfig:
    values = dict(
        d=eff["dim"], s=eff["local_dim"], a=eff["drift"], k=eff["scale_k"], eta0=eff["eta0"],
        epochs=eff["epochs"], lambda_mode=eff["lambda_mode"], seed=eff["seed"], workers=eff["workers"],
        neg_uniform=eff["neg_uniform"], project_u_only=eff["project_u_only"], count_cap=eff["count_cap"])
    values.update(override)
    return TrainConfig(**values)


def _prepare_corpus(path, eff):
    keep = set(eff["relations"])
    raw = read_tuples(path)
    selected = [t for t in raw if t.relation in keep]
    if len(selected) < len(raw):
        logger.info("ignored %d tuple record(s) outside --relations", len(raw) - len(selected))
    vocab, rels = build_vocab(selected, eff["min_count"])
    corpus = encode_corpus(selected, vocab, rels)
    return vocab, rels, corpus


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_extract(args):
    relations = _csv(args.relations)
    tuples = []
    for path in args.input:
        tuples.extend(extract_tuples(read_conllu(path), relations, lowercase=args.lowercase))
    n = write_tuples(tuples, args.output)
    print(f"tuples\t{len(tuples)}\ndistinct\t{n}\noutput\t{args.output}")
    return 0


def cmd_build_vocab(args):
    vocab, rels = build_vocab(read_tuples(args.input), args.min_count)
    save_vocab(vocab, args.output + ".vocab")
    save_relations(rels, args.output + ".rels")
    print(f"n\t{vocab.n}\nm\t{rels.m}\nvocab\t{args.output}.vocab\nrels\t{args.output}.rels")
    return 0


def cmd_train(args):
    eff = resolve_training(args)
    vocab, rels, corpus = _prepare_corpus(args.input, eff)
    cfg = make_config(eff)
    params, report = train(corpus, cfg, rel_names=rels.relations)
    save_checkpoint(params, vocab, rels, args.output, epoch=cfg.epochs, seed=cfg.seed)
    report_path = args.report or args.output + ".report.json"
    summary = report.to_dict()
    summary.update(n=vocab.n, m=rels.m, records=len(corpus), dropped=corpus.dropped,
                   param_count=param_count(vocab.n, rels.m, cfg.d, cfg.s))
    for row in summary["epochs"]:
        row.pop("seconds")
        row.pop("tuples_per_sec")
    _write_json(summary, report_path)
    print("epoch\tlambda\tmean_loss\tclamps\tprojections")
    for e in report.epochs:
        print(f"{e.epoch}\t{e.lam:g}\t{e.mean_loss:.6f}\t{e.clamps}\t{e.projections + e.settled}")
    print(f"# checkpoint\t{args.output}\n# report\t{report_path}")
    return 0


def _emit_eval(result, args):
    print(result.to_tsv())
    print(f"coverage\t{result.coverage:.4f}")
    if args.json:
        _write_json(result.to_dict(), args.json)


def cmd_eval_sp(args):
    params, vocab, rels = load_checkpoint(args.model)
    _emit_eval(eval_sp(params, vocab, rels, read_sp_dataset(args.input, args.format)), args)
    return 0


def cmd_eval_ws(args):
    params, vocab, rels = load_checkpoint(args.model)
    res = eval_ws(params, vocab, read_ws_dataset(args.input), args.source, args.combiner, rels)
    _emit_eval(res, args)
    return 0


def cmd_export(args):
    params, vocab, rels = load_checkpoint(args.model)
    dim = export_text(params, vocab, rels, args.selector, args.role, args.output)
    print(f"rows\t{vocab.n}\ndim\t{dim}\noutput\t{args.output}")
    return 0


def cmd_info(args):
    hdr = read_header(args.model)
    count = hdr.param_count
    multi = multi_prototype_count(hdr.n, hdr.m, hdr.d)
    info = {
        "version": hdr.version, "n": hdr.n, "m": hdr.m, "d": hdr.d, "s": hdr.s, "a": hdr.a,
        "k": hdr.k, "epoch": hdr.epoch, "seed": hdr.seed, "param_count": count,
        "param_bytes_f64": 8 * count, "param_bytes_f32": 4 * count,
        "file_bytes": os.path.getsize(args.model), "multi_prototype_count": multi,
        "size_ratio": count / multi,
    }
    for key, value in info.items():
        print(f"{key}\t{value}")
    if args.json:
        _write_json(info, args.json)
    return 0


def cmd_verify(args):
    t0 = time.perf_counter()
    rows = gradient_suite(range(args.seeds), eps=args.eps, tol=args.tol)
    print("seed\td\ts\tmax_rel_err\tresult")
    for seed, d, s, err, ok in rows:
        print(f"{seed}\t{d}\t{s}\t{err:.3e}\t{'PASS' if ok else 'FAIL'}")
    failed = sum(not r[4] for r in rows)
    worst = max(r[3] for r in rows)
    print(f"# {len(rows) - failed}/{len(rows)} passed, worst {worst:.3e}, "
          f"{time.perf_counter() - t0:.1f}s")
    return 0 if not failed else 2


def cmd_sweep(args):
    eff = resolve_training(args)
    vocab, rels, corpus = _prepare_corpus(args.input, eff)
    gold = read_sp_dataset(args.gold)
    field = {"s": "s", "a": "a"}[args.param]
    values = [float(v) for v in _csv(args.values)]
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    rel_names = sorted({row.relation for row in gold})
    try:
        out.write("\t".join([args.param, "seed", "average"] + rel_names + ["coverage"]) + "\n")
        for value in values:
            for rep in range(args.repeats):
                seed = eff["seed"] + rep
                v = int(value) if field == "s" else value
                cfg = make_config(eff, seed=seed, **{field: v})
                params, _ = train(corpus, cfg, rel_names=rels.relations)
                res = eval_sp(params, vocab, rels, gold)
                cells = [f"{value:g}", str(seed), f"{res.summary:.4f}"]
                cells += [f"{res.rho.get(r, float('nan')):.4f}" for r in rel_names]
                cells.append(f"{res.coverage:.4f}")
                out.write("\t".join(cells) + "\n")
                out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_synth(args):
    spec = SynthSpec(n_words=args.words_per_group, n_groups=args.groups,
                     relations=tuple(_csv(args.relations)), tuples_per_relation=args.tuples_per_relation,
                     pairs_per_cell=args.pairs_per_cell, seed=args.seed)
    tuples, gold = synth_corpus(spec)
    tpath, gpath = args.output + ".tuples.tsv", args.output + ".gold.tsv"
    write_tuples(tuples, tpath)
    write_sp_dataset(gold, gpath)
    print(f"records\t{len(tuples)}\ngold_rows\t{len(gold)}\ntuples\t{tpath}\ngold\t{gpath}")
    return 0


# --------------------------------------------------------------------------

def build_parser() -> Parser:
    parser = Parser(prog="mwe", description="Multiplex word embeddings over dependency relations.")
    parser.add_argument("--version", action="version", version=f"mwe {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="no progress on stderr")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=Parser)
    sub.required = True

    p = sub.add_parser("extract", help="CoNLL-U -> tuple file")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--relations", default=",".join(DEFAULT_RELATIONS))
    p.add_argument("--lowercase", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("build-vocab", help="tuple file -> vocabulary and relation files")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="output prefix")
    p.add_argument("--min-count", type=int, default=DEFAULT_MIN_COUNT)
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("train", help="tuple file -> checkpoint")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--report", default=None, help="JSON training report (default <output>.report.json)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval-sp", help="selectional-preference Spearman")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("auto", "tsv", "jsonl"), default="auto")
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_eval_sp)

    p = sub.add_parser("eval-ws", help="word-similarity Spearman")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--source", default="center", help="'center' or a relation name")
    p.add_argument("--combiner", choices=COMBINERS, default="h")
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_eval_ws)

    p = sub.add_parser("export", help="checkpoint -> text vectors")
    p.add_argument("--model", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--selector", default="center", help="'center' or a relation name")
    p.add_argument("--role", choices=COMBINERS, default="h")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("info", help="checkpoint header and sizes")
    p.add_argument("--model", required=True)
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("verify", help="finite-difference gradient suite")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="SP correlation against one hyperparameter")
    p.add_argument("--input", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--param", choices=("s", "a"), required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--repeats", type=int, default=1, help="seeds per value")
    p.add_argument("--output", default=None, help="TSV path (default stdout)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="planted corpus + gold SP table")
    p.add_argument("--output", required=True, help="output prefix")
    p.add_argument("--groups", type=int, default=4)
    p.add_argument("--words-per-group", type=int, default=50)
    p.add_argument("--tuples-per-relation", type=int, default=16_667)
    p.add_argument("--pairs-per-cell", type=int, default=40)
    p.add_argument("--relations", default=",".join(DEFAULT_RELATIONS))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mwe: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit 2
        print(f"mwe: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
