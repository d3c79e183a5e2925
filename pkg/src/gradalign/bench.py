"""Alignment metrics, ablation runs and the synthetic noise sweep."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import AlignConfig
from .graph import make_noisy_copy, split_seeds
from .matcher import align

log = logging.getLogger(__name__)

CSV_FIELDS = ["variant", "edge_noise", "attr_noise", "seed", "acc", "p_at_1", "p_at_5",
              "p_at_10", "runtime_s", "iter", "alpha", "tau"]
DEFAULT_QS = (1, 5, 10)
ABLATIONS = ("grad-align", "ablation-1", "ablation-2", "ablation-3", "grad-align-ea")


def accuracy(mapping, gt, exclude_seeds=True):
    """Fraction of ground-truth pairs the mapping gets right.

    Pairs whose source node is a seed of ``mapping`` are left out of both
    numerator and denominator when ``exclude_seeds`` is set.
    """
    seeds = mapping.seeds if exclude_seeds else set()
    evaluated = [(s, t) for s, t in gt if s not in seeds]
    if not evaluated:
        return float("nan")
    hits = sum(mapping.forward.get(s) == t for s, t in evaluated)
    return hits / len(evaluated)


def precision_at_q(sim, gt, q):
    """Share of ground-truth pairs whose target is in the top ``q`` of its source row.

    Rows are ranked by descending score with ties going to the lower column
    index. The denominator is every ground-truth pair.
    """
    scores = sim.scores if hasattr(sim, "scores") else np.asarray(sim)
    n_t = scores.shape[1]
    if q < 1:
        raise ValueError("q must be >= 1")
    if q > n_t:
        log.warning("q=%d exceeds the %d target nodes; clamping", q, n_t)
        q = n_t
    pairs = gt.pairs
    if len(pairs) == 0:
        return float("nan")
    rows = scores[pairs[:, 0]]
    mine = rows[np.arange(len(pairs)), pairs[:, 1]][:, None]
    cols = np.arange(n_t)[None, :]
    ahead = (rows > mine) | ((rows == mine) & (cols < pairs[:, 1][:, None]))
    rank = ahead.sum(axis=1)
    return float(np.mean(rank < q))


@dataclass
class EvalReport:
    acc: float
    precision_at: dict
    runtime_seconds: float
    config_echo: dict
    seed: int
    variant: str = "grad-align"
    edge_noise: float = 0.0
    attr_noise: float = 0.0
    alpha: float = float("nan")
    error: str | None = None
    extra: dict = field(default_factory=dict)

    def row(self, timing=True):
        p = self.precision_at
        return {
            "variant": self.variant,
            "edge_noise": _fmt(self.edge_noise),
            "attr_noise": _fmt(self.attr_noise),
            "seed": self.seed,
            "acc": _fmt(self.acc),
            "p_at_1": _fmt(p.get(1, float("nan"))),
            "p_at_5": _fmt(p.get(5, float("nan"))),
            "p_at_10": _fmt(p.get(10, float("nan"))),
            "runtime_s": _fmt(self.runtime_seconds) if timing else "",
            "iter": self.config_echo.get("iter"),
            "alpha": _fmt(self.alpha),
            "tau": _fmt(self.config_echo.get("tau")),
        }


def _fmt(x):
    return f"{x:.6f}" if isinstance(x, float) else str(x)


def evaluate(g_s, g_t, seeds, gt, cfg, qs=DEFAULT_QS, exclude_seeds=True, **tags):
    """Run one alignment and score it against ``gt``."""
    budget = len(gt) - len(seeds)
    start = time.perf_counter()
    mapping, sim = align(g_s, g_t, seeds, cfg, pair_budget=budget)
    elapsed = time.perf_counter() - start
    echo = cfg.as_dict()
    if cfg.variant == "ablation-1":
        echo["iter"] = 1
    return EvalReport(
        acc=accuracy(mapping, gt, exclude_seeds),
        precision_at={q: precision_at_q(sim, gt, q) for q in qs},
        runtime_seconds=elapsed,
        config_echo=echo,
        seed=cfg.rng_seed,
        variant=cfg.variant,
        alpha=cfg.resolved_alpha(g_s.n, g_t.n),
        **tags,
    )


def run_ablations(g_s, g_t, seeds, gt, cfg, variants=ABLATIONS):
    """Evaluate each variant on the same instance and seeds."""
    return {v: evaluate(g_s, g_t, seeds, gt, cfg.replace(variant=v)) for v in variants}


def cell_seed(base_seed, cell_index, repeat):
    """Independent RNG seed for one sweep cell, stable under parallel execution."""
    return int(np.random.SeedSequence([base_seed, cell_index, repeat]).generate_state(1)[0])


def _run_cell(args):
    base, edge_noise, attr_noise, cfg, seed, variants = args
    copy, gt = make_noisy_copy(base, edge_noise, attr_noise, rng_seed=seed)
    seeds, _ = split_seeds(gt, cfg.t, rng_seed=seed)
    out = []
    for v in variants:
        run_cfg = cfg.replace(variant=v, rng_seed=seed)
        try:
            out.append(evaluate(base, copy, seeds, gt, run_cfg,
                                edge_noise=edge_noise, attr_noise=attr_noise))
        except Exception as exc:  # one failed cell must not stop the sweep
            log.error("cell (%s, %s, seed %d, %s) failed: %s", edge_noise, attr_noise, seed, v, exc)
            nan = float("nan")
            out.append(EvalReport(nan, {q: nan for q in DEFAULT_QS}, nan, run_cfg.as_dict(), seed,
                                  v, edge_noise, attr_noise, error=f"{type(exc).__name__}: {exc}"))
    return out


def run_benchmark(base, noise_grid, cfg=None, repeats=1, variants=("grad-align",),
                  base_seed=0, jobs=1):
    """Noisy-copy sweep: one report per grid point, repeat and variant.

    Each (grid point, repeat) gets its own seed from :func:`cell_seed`; the
    noisy copy, the prior seeds and the encoder initialisation all derive
    from it, and every variant in that cell sees the same instance.
    """
    cfg = cfg or AlignConfig()
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    tasks = []
    for ci, (edge_noise, attr_noise) in enumerate(noise_grid):
        for r in range(repeats):
            tasks.append((base, float(edge_noise), float(attr_noise), cfg,
                          cell_seed(base_seed, ci, r), tuple(variants)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    return [rep for cell in results for rep in cell]


def summarize(reports):
    """Mean and standard deviation of every metric per (variant, edge, attr) group."""
    groups = {}
    for rep in reports:
        groups.setdefault((rep.variant, rep.edge_noise, rep.attr_noise), []).append(rep)
    rows = []
    for (variant, e, a), reps in groups.items():
        row = {"variant": variant, "edge_noise": e, "attr_noise": a, "n": len(reps)}
        metrics = {"acc": [r.acc for r in reps]}
        for q in DEFAULT_QS:
            metrics[f"p_at_{q}"] = [r.precision_at.get(q, float("nan")) for r in reps]
        metrics["runtime_s"] = [r.runtime_seconds for r in reps]
        for k, vals in metrics.items():
            vals = np.array(vals, dtype=float)
            row[f"{k}_mean"] = float(np.nanmean(vals)) if np.any(~np.isnan(vals)) else math.nan
            row[f"{k}_std"] = float(np.nanstd(vals)) if np.any(~np.isnan(vals)) else math.nan
        rows.append(row)
    return rows


def write_csv(reports, path, timing=False):
    """Write the sweep CSV. Runtimes are only filled in with ``timing=True``
    so that repeated runs produce identical files."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for rep in reports:
            w.writerow(rep.row(timing))


def write_summary_csv(rows, path):
    if not rows:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
