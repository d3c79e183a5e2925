"""Command-line driver: ``gradalign {align,synth,bench}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
from pathlib import Path

from .augment import align_ea, save_augment_log
from .bench import (DEFAULT_QS, accuracy, precision_at_q, run_benchmark, summarize, write_csv,
                    write_summary_csv, EvalReport)
from .config import AGGREGATORS, MODELS, VARIANTS, AlignConfig
from .errors import GradAlignError, NumericalError
from .graph import (GroundTruth, load_graph, load_ground_truth, make_noisy_copy, save_graph,
                    save_ground_truth, split_seeds)
from .matcher import align
from .similarity import save_matrix

log = logging.getLogger("gradalign")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# configuration resolution: flag > config file > GRADALIGN_SEED > default

_CONFIG_FLAGS = {
    # flag dest -> AlignConfig field
    "k": "k", "hidden_dim": "hidden_dim", "learning_rate": "learning_rate", "epochs": "epochs",
    "model": "model", "aggregator": "aggregator", "alpha": "alpha", "beta": "beta",
    "iter": "iter", "t": "t", "tau": "tau", "variant": "variant",
    "normalize_embeddings": "normalize_embeddings", "zero_fallback": "zero_fallback",
    "seed": "rng_seed", "refresh_epochs": "refresh_epochs", "full_retrain": "full_retrain",
    "squared_loss": "squared_loss",
}


def _parse_bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_alpha(text):
    return None if str(text).strip().lower() == "auto" else float(text)


def _coerce(name, value):
    if name == "alpha":
        return _parse_alpha(value)
    kind = AlignConfig.field_types()[name]
    if kind is bool:
        return _parse_bool(value)
    if kind is int:
        return int(value)
    if kind is float:
        return float(value)
    return str(value)


def read_config_file(path):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    names = {f.name for f in dataclasses.fields(AlignConfig)}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GradAlignError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            key = _CONFIG_FLAGS.get(key, key)
            if key not in names:
                raise GradAlignError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _coerce(key, value)
            except ValueError as exc:
                raise GradAlignError(f"{path}:{lineno}: {exc}") from None
    return out


def resolve_config(args):
    values = {}
    env_seed = os.environ.get("GRADALIGN_SEED")
    if env_seed:
        values["rng_seed"] = int(env_seed)
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for dest, name in _CONFIG_FLAGS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[name] = v
    return AlignConfig(**values)


def format_config(cfg):
    lines = []
    for k, v in cfg.as_dict().items():
        if k == "alpha" and v is None:
            v = "auto"
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def _add_config_flags(p):
    g = p.add_argument_group("alignment hyperparameters")
    g.add_argument("--config", help="key = value file; explicit flags take precedence")
    g.add_argument("--k", type=int, help="number of GNN layers (default 2)")
    g.add_argument("--hidden-dim", type=int)
    g.add_argument("--learning-rate", "--lr", dest="learning_rate", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--model", choices=MODELS)
    g.add_argument("--aggregator", choices=AGGREGATORS)
    g.add_argument("--alpha", type=_parse_alpha, help="Tversky alpha or 'auto' (n_t/n_s)")
    g.add_argument("--beta", type=float)
    g.add_argument("--iter", type=int)
    g.add_argument("--t", type=float, help="fraction of ground truth used as prior seeds")
    g.add_argument("--tau", type=float, help="edge augmentation threshold; 'inf' disables")
    g.add_argument("--variant", choices=VARIANTS)
    g.add_argument("--normalize-embeddings", type=_parse_bool, metavar="BOOL")
    g.add_argument("--zero-fallback", type=_parse_bool, metavar="BOOL")
    g.add_argument("--refresh-epochs", type=int)
    g.add_argument("--full-retrain", type=_parse_bool, metavar="BOOL")
    g.add_argument("--squared-loss", type=_parse_bool, metavar="BOOL")
    g.add_argument("--seed", type=int, help="RNG seed (default: $GRADALIGN_SEED or 0)")


def build_parser():
    parser = _Parser(prog="gradalign", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("align", help="align two graphs")
    p.add_argument("--source-edges", required=True)
    p.add_argument("--target-edges", required=True)
    p.add_argument("--source-attrs")
    p.add_argument("--target-attrs")
    p.add_argument("--seeds", help="prior seed pairs (source target tokens)")
    p.add_argument("--ground-truth", help="true pairs; enables metrics")
    p.add_argument("--out", default="alignment.tsv")
    p.add_argument("--eval-out", help="EvalReport CSV (default: <out>.eval.csv)")
    p.add_argument("--similarity-out", help="dump of the final similarity matrix")
    p.add_argument("--augment-log", help="edge augmentation log (grad-align-ea only)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("synth", help="write a noisy, relabelled copy of a graph")
    p.add_argument("--base-edges", required=True)
    p.add_argument("--base-attrs")
    p.add_argument("--edge-noise", type=float, required=True)
    p.add_argument("--attr-noise", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="noisy-copy benchmark sweep")
    p.add_argument("--base-edges", required=True)
    p.add_argument("--base-attrs")
    p.add_argument("--grid", required=True,
                   help="comma-separated edge:attr noise points, e.g. 0.1:0.1,0.3:0.1")
    p.add_argument("--iter-grid", help="comma-separated iter values to sweep")
    p.add_argument("--repeats", type=int, required=True)
    p.add_argument("--variants", default="grad-align")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="record wall-clock runtimes in the CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


# --------------------------------------------------------------------------
# subcommands


def write_alignment(mapping, sim, path, g_s, g_t):
    """``source<TAB>target<TAB>score<TAB>origin`` lines sorted by source id."""
    with open(path, "w", encoding="utf-8") as fh:
        for s, t in mapping:
            score = mapping.score[s]
            if math.isnan(score):
                score = float(sim.scores[s, t])
            fh.write(f"{g_s.label(s)}\t{g_t.label(t)}\t{score:.6f}\t{mapping.origin[s]}\n")


def cmd_align(args):
    cfg = resolve_config(args)
    g_s = load_graph(args.source_edges, args.source_attrs)
    g_t = load_graph(args.target_edges, args.target_attrs)
    gt = load_ground_truth(args.ground_truth, g_s, g_t) if args.ground_truth else None
    if args.seeds:
        seeds = load_ground_truth(args.seeds, g_s, g_t)
    elif gt is not None:
        seeds, _ = split_seeds(gt, cfg.t, rng_seed=cfg.rng_seed)
    else:
        seeds = GroundTruth([])
    budget = None
    if gt is not None:
        seed_src = {s for s, _ in seeds}
        budget = sum(1 for s, _ in gt if s not in seed_src)

    print(format_config(cfg), end="")
    aligner = None
    if cfg.variant == "grad-align-ea":
        (mapping, sim), aligner = align_ea(g_s, g_t, seeds, cfg, budget, return_aligner=True)
    else:
        mapping, sim = align(g_s, g_t, seeds, cfg, budget)

    out = Path(args.out)
    write_alignment(mapping, sim, out, g_s, g_t)
    Path(f"{out}.config").write_text(format_config(cfg), encoding="utf-8")
    if args.similarity_out:
        save_matrix(sim, args.similarity_out)
    if args.augment_log and aligner is not None:
        save_augment_log(aligner.augment_log(), args.augment_log, g_s, g_t)
    print(f"pairs={len(mapping)}")

    if gt is not None:
        report = EvalReport(
            acc=accuracy(mapping, gt),
            precision_at={q: precision_at_q(sim, gt, q) for q in DEFAULT_QS},
            runtime_seconds=float("nan"),
            config_echo=cfg.as_dict(),
            seed=cfg.rng_seed,
            variant=cfg.variant,
            alpha=cfg.resolved_alpha(g_s.n, g_t.n),
        )
        print(f"acc={report.acc:.6f}")
        for q in DEFAULT_QS:
            print(f"p_at_{q}={report.precision_at[q]:.6f}")
        write_csv([report], args.eval_out or f"{out}.eval.csv")
    return 0


def cmd_synth(args):
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("GRADALIGN_SEED", 0))
    base = load_graph(args.base_edges, args.base_attrs)
    copy, gt = make_noisy_copy(base, args.edge_noise, args.attr_noise, rng_seed=seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_graph(copy, out / "target.edges", out / "target.attrs")
    save_ground_truth(gt, out / "ground_truth.txt", base, copy)
    print(f"nodes={copy.n}\nedges={copy.num_edges}\nremoved={base.num_edges - copy.num_edges}")
    return 0


def _parse_grid(text):
    points = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        e, _, a = item.partition(":")
        points.append((float(e), float(a or 0.0)))
    if not points:
        raise GradAlignError("empty --grid")
    return points


def cmd_bench(args):
    cfg = resolve_config(args)
    base = load_graph(args.base_edges, args.base_attrs)
    grid = _parse_grid(args.grid)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for v in variants:
        if v not in VARIANTS:
            raise GradAlignError(f"unknown variant {v!r}")
    iters = [int(x) for x in args.iter_grid.split(",")] if args.iter_grid else [cfg.iter]

    print(format_config(cfg), end="")
    reports = []
    for it in iters:
        reports += run_benchmark(base, grid, cfg.replace(iter=it), args.repeats, variants,
                                 base_seed=cfg.rng_seed, jobs=args.jobs)
    write_csv(reports, args.out_csv, timing=args.timing)
    Path(f"{args.out_csv}.config").write_text(format_config(cfg), encoding="utf-8")

    groups = {}
    for rep in reports:
        key = (rep.variant, rep.config_echo["iter"], rep.edge_noise, rep.attr_noise)
        groups.setdefault(key, []).append(rep)
    rows = []
    print(f"{'variant':<15}{'iter':>5}{'edge':>7}{'attr':>7}{'acc_mean':>10}{'acc_std':>9}{'p@1':>8}")
    for (variant, it, e, a), reps in groups.items():
        s = summarize(reps)[0]
        s["iter"] = it
        rows.append(s)
        print(f"{variant:<15}{it:>5}{e:>7.2f}{a:>7.2f}{s['acc_mean']:>10.4f}"
              f"{s['acc_std']:>9.4f}{s['p_at_1_mean']:>8.4f}")
    write_summary_csv(rows, f"{args.out_csv}.summary.csv")

    failed = sum(r.error is not None for r in reports)
    if failed:
        print(f"{failed} of {len(reports)} runs failed", file=sys.stderr)
    return 1 if failed == len(reports) else 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"gradalign: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (GradAlignError, OSError, ValueError) as exc:
        print(f"gradalign: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
