"""Command-line pipeline: gen, train, constraints, learn, predict, eval.

Every option can also come from a JSON file passed with ``--config``; keys
are the long option names with dashes replaced by underscores. Flags given
on the command line win over the file.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import constraints as C
from .chain import load_model, save_model, token_accuracy, train_base_perceptron
from .corpus import LabeledSequence, atomic_write_text, induce_schema, read_corpus, write_corpus
from .evaluation import convergence_report, evaluate
from .inference import hard_dd, mixed_dd, soft_dd, unconstrained
from .penalties import PenaltyLearnerConfig, active_constraints, learn_penalties
from .synthetic import GeneratorConfig, generate_splits

MODES = ("unconstrained", "hard-dd", "soft-dd")


@dataclass
class RunConfig:
    out_dir: str = "run"
    train: Optional[str] = None
    dev: Optional[str] = None
    test: Optional[str] = None
    model: Optional[str] = None
    constraints: Optional[str] = None
    out: Optional[str] = None
    gold: Optional[str] = None
    pred: Optional[str] = None
    trace: Optional[str] = None
    # gen
    seed: int = 0
    n_train: int = 800
    n_dev: int = 600
    n_test: int = 500
    confusion: float = 0.5
    template: str = "hierarchical"
    # train
    epochs: int = 8
    lr: float = 1.0
    # constraints
    cutoff: float = 2.75
    # learn
    learn_epochs: int = 5
    rate: float = 0.2
    no_average: bool = False
    initial_penalty: float = 0.0
    shuffle_seed: Optional[int] = None
    # inference
    mode: str = "soft-dd"
    max_iters: int = 100
    step0: float = 1.0
    caps: Optional[str] = None


class CliError(Exception):
    pass


def _require(path: Optional[str], what: str) -> Path:
    if not path:
        raise CliError(f"missing --{what.replace('_', '-')}")
    p = Path(path)
    if not p.exists():
        raise CliError(f"{what}: no such file: {p}")
    return p


def _split_path(cfg: RunConfig, name: str) -> Path:
    given = getattr(cfg, name)
    return Path(given) if given else Path(cfg.out_dir) / f"{name}.txt"


def _model_path(cfg: RunConfig) -> Path:
    return Path(cfg.model) if cfg.model else Path(cfg.out_dir) / "model.npz"


def _load_constraint_set(cfg: RunConfig, schema) -> C.ConstraintSet:
    path = _require(cfg.constraints, "constraints")
    return C.ConstraintSet(schema, tuple(C.load_constraints(path)))


def cmd_gen(cfg: RunConfig) -> None:
    gen = GeneratorConfig(seed=cfg.seed, confusion=cfg.confusion, template=cfg.template)
    splits = generate_splits(gen, {"train": cfg.n_train, "dev": cfg.n_dev, "test": cfg.n_test})
    for name, corpus in splits.items():
        path = _split_path(cfg, name)
        write_corpus(path, corpus)
        print(f"{name}\t{len(corpus)}\t{path}")


def cmd_train(cfg: RunConfig) -> None:
    train = read_corpus(_require(str(_split_path(cfg, "train")), "train"))
    dev_path = _split_path(cfg, "dev")
    dev = read_corpus(dev_path) if dev_path.exists() else []
    schema = induce_schema(train, dev)
    model = train_base_perceptron(train, cfg.epochs, cfg.lr, schema=schema)
    path = _model_path(cfg)
    save_model(model, path)
    print(f"model\t{path}\tlabels={len(schema)}\tfeatures={len(model.features)}")
    if dev:
        print(f"dev_token_accuracy\t{token_accuracy(model, dev):.6f}")


def cmd_constraints(cfg: RunConfig) -> None:
    model = load_model(_require(str(_model_path(cfg)), "model"))
    dev = read_corpus(_require(str(_split_path(cfg, "dev")), "dev"))
    full = C.ConstraintSet(model.schema, tuple(C.instantiate_all(model.schema)))
    imp = C.importance_scores(full, dev, model)
    pruned = C.prune(full, imp, cfg.cutoff)
    kept = {con.form: s for con, s in zip(full, imp)}
    notes = [f"imp={kept[con.form]!r}" for con in pruned]
    out = Path(cfg.out) if cfg.out else Path(cfg.out_dir) / "constraints.txt"
    C.save_constraints(out, pruned, notes)
    print(f"constraints\t{out}\tinstantiated={len(full)}\tkept={len(pruned)}\tcutoff={cfg.cutoff}")


def cmd_learn(cfg: RunConfig) -> None:
    model = load_model(_require(str(_model_path(cfg)), "model"))
    dev = read_corpus(_require(str(_split_path(cfg, "dev")), "dev"))
    cset = _load_constraint_set(cfg, model.schema)
    learner = PenaltyLearnerConfig(
        epochs=cfg.learn_epochs,
        rate=cfg.rate,
        averaging=not cfg.no_average,
        inner_max_iters=cfg.max_iters,
        initial_penalty=cfg.initial_penalty,
        step0=cfg.step0,
        shuffle_seed=cfg.shuffle_seed,
    )
    penalties = learn_penalties(dev, cset, model, learner)
    _, sparsity = active_constraints(cset, penalties)
    out = Path(cfg.out) if cfg.out else Path(cfg.out_dir) / "penalties.txt"
    C.save_constraints(out, cset.with_penalties(penalties))
    print(
        f"penalties\t{out}\tconstraints={len(cset)}\t"
        f"active={int(np.sum(penalties > 0))}\tsparsity={sparsity:.4f}"
    )


def _decode(mode, scores, cset, cfg):
    if mode == "unconstrained" or cset is None:
        return unconstrained(scores, cset)
    if mode == "hard-dd":
        return hard_dd(scores, cset, cfg.max_iters, cfg.step0, trace=bool(cfg.trace))
    if np.any(np.isinf(cset.penalties)):
        return mixed_dd(scores, cset, cfg.max_iters, cfg.step0, trace=bool(cfg.trace))
    return soft_dd(scores, cset, cfg.max_iters, cfg.step0, trace=bool(cfg.trace))


def cmd_predict(cfg: RunConfig) -> None:
    if cfg.mode not in MODES:
        raise CliError(f"--mode must be one of {', '.join(MODES)}")
    model = load_model(_require(str(_model_path(cfg)), "model"))
    corpus = read_corpus(_require(str(_split_path(cfg, "test")), "test"))
    cset = None if cfg.mode == "unconstrained" and not cfg.constraints else (
        _load_constraint_set(cfg, model.schema)
    )
    preds, trace_lines, iters, conv = [], [], [], []
    for i, seq in enumerate(corpus):
        res = _decode(cfg.mode, model.scores(seq.tokens), cset, cfg)
        preds.append(LabeledSequence(seq.tokens, tuple(model.schema.names_of(res.labels))))
        iters.append(res.iterations)
        conv.append(res.converged)
        if res.trace:
            trace_lines.extend(f"{i}\t{row.format()}" for row in res.trace)
    out = Path(cfg.out) if cfg.out else Path(cfg.out_dir) / "predictions.txt"
    if cfg.trace:
        atomic_write_text(cfg.trace, "".join(line + "\n" for line in trace_lines))
    write_corpus(out, preds)
    n = max(1, len(corpus))
    print(
        f"predictions\t{out}\tmode={cfg.mode}\tsequences={len(corpus)}\t"
        f"converged={100.0 * sum(conv) / n:.2f}%\tmean_iterations={sum(iters) / n:.4f}"
    )


def cmd_eval(cfg: RunConfig) -> None:
    gold = read_corpus(_require(cfg.gold or str(_split_path(cfg, "test")), "gold"))
    pred = read_corpus(_require(cfg.pred or str(Path(cfg.out_dir) / "predictions.txt"), "pred"))
    report = evaluate([s.labels for s in gold], [s.labels for s in pred])
    prefix = Path(cfg.out) if cfg.out else Path(cfg.out_dir) / "eval"
    atomic_write_text(f"{prefix}.tsv", report.to_tsv())
    atomic_write_text(f"{prefix}.json", report.to_json())
    m = report.micro
    print(f"micro\tP={m.precision:.6f}\tR={m.recall:.6f}\tF1={m.f1:.6f}")
    if cfg.caps:
        caps = [int(x) for x in cfg.caps.split(",") if x]
        model = load_model(_require(str(_model_path(cfg)), "model"))
        cset = _load_constraint_set(cfg, model.schema)
        conv = convergence_report(gold, model, cset, caps=caps, step0=cfg.step0)
        atomic_write_text(f"{prefix}.convergence.tsv", conv.to_tsv())
        atomic_write_text(f"{prefix}.convergence.json", conv.to_json())
        sys.stdout.write(conv.to_tsv())


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "constraints": cmd_constraints,
    "learn": cmd_learn,
    "predict": cmd_predict,
    "eval": cmd_eval,
}


def _add(p, name, typ, help_):
    flag = "--" + name.replace("_", "-")
    if typ is bool:
        p.add_argument(flag, dest=name, action="store_true", default=None, help=help_)
    else:
        p.add_argument(flag, dest=name, type=typ, default=None, help=help_)


_OPTIONS = {
    "common": [("out_dir", str, "working directory for default file names"),
               ("config", str, "JSON file of option values")],
    "gen": [("seed", int, ""), ("n_train", int, ""), ("n_dev", int, ""), ("n_test", int, ""),
            ("confusion", float, "author/editor ambiguity rate"),
            ("template", str, "flat or hierarchical"),
            ("train", str, ""), ("dev", str, ""), ("test", str, "")],
    "train": [("train", str, ""), ("dev", str, ""), ("model", str, ""),
              ("epochs", int, ""), ("lr", float, "")],
    "constraints": [("model", str, ""), ("dev", str, ""), ("out", str, ""),
                    ("cutoff", float, "importance cutoff (inf keeps nothing)")],
    "learn": [("model", str, ""), ("dev", str, ""), ("constraints", str, ""), ("out", str, ""),
              ("learn_epochs", int, ""), ("rate", float, ""), ("no_average", bool, ""),
              ("initial_penalty", float, ""), ("shuffle_seed", int, ""),
              ("max_iters", int, "Soft-DD budget per example"), ("step0", float, "")],
    "predict": [("model", str, ""), ("test", str, ""), ("constraints", str, ""), ("out", str, ""),
                ("mode", str, "unconstrained, hard-dd or soft-dd"), ("max_iters", int, ""),
                ("step0", float, ""), ("trace", str, "write per-iteration trace here")],
    "eval": [("gold", str, ""), ("pred", str, ""), ("out", str, "report path prefix"),
             ("caps", str, "comma-separated iteration caps for the convergence report"),
             ("model", str, ""), ("constraints", str, ""), ("step0", float, "")],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softdd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        for opt in _OPTIONS["common"] + _OPTIONS[name]:
            _add(p, *opt)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values.update(json.load(fh))
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key, val in vars(args).items():
        if key in known and val is not None:
            values[key] = val
    cfg = RunConfig(**values)
    if cfg.max_iters < 1:
        raise CliError("--max-iters must be >= 1")
    if not cfg.step0 > 0:
        raise CliError("--step0 must be positive")
    if not (0.0 <= cfg.confusion <= 1.0):
        raise CliError("--confusion must be in [0, 1]")
    if math.isnan(cfg.cutoff):
        raise CliError("--cutoff must be a number")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except (CliError, OSError, ValueError) as exc:
        print(f"softdd {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
