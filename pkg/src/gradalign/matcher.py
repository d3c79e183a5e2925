"""Gradual matching: pick the top-N confident pairs, extend the mapping, repeat."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import AlignConfig
from .encoder import forward, train
from .errors import ContractError
from .graph import GroundTruth
from .similarity import NodeMapping, SimilarityMatrix, embedding_similarity, fuse, tversky_similarity

log = logging.getLogger(__name__)


class Selection(NamedTuple):
    pairs: list
    shortfall: int


@dataclass(frozen=True)
class MatchPlan:
    """How many pairs to find in total and per round."""

    pair_budget: int
    iter: int

    @property
    def per_round(self):
        if self.pair_budget == 0:
            return 0
        if self.iter == 1:
            return self.pair_budget
        return math.ceil(self.pair_budget / (self.iter - 1))

    @property
    def rounds(self):
        return math.ceil(self.pair_budget / self.per_round) if self.pair_budget else 0

    def round_sizes(self):
        left = self.pair_budget
        for _ in range(self.rounds):
            n = min(self.per_round, left)
            left -= n
            yield n


def _greedy(scores, row_alive, col_alive, n, valid=None):
    """Repeatedly take the largest live cell and retire its row and column.

    Ties go to the smallest row, then the smallest column. Per-row maxima are
    cached and only rows whose best column was just retired are rescanned.
    """
    work = np.array(scores, dtype=np.float64)
    work[~row_alive, :] = -np.inf
    work[:, ~col_alive] = -np.inf
    if valid is not None:
        work[~valid] = -np.inf
    if work.size == 0:
        return []
    best = work.max(axis=1)
    arg = work.argmax(axis=1)
    picks = []
    while len(picks) < n:
        r = int(np.argmax(best))
        if best[r] == -np.inf:
            break
        c = int(arg[r])
        picks.append((r, c))
        work[r, :] = -np.inf
        work[:, c] = -np.inf
        best[r] = -np.inf
        stale = np.flatnonzero((arg == c) & (best > -np.inf))
        if len(stale):
            best[stale] = work[stale].max(axis=1)
            arg[stale] = work[stale].argmax(axis=1)
    return picks


def select_top_n(sim, n, fallback=None):
    """Greedy one-to-one selection of ``n`` pairs from the live cells of ``sim``.

    With a ``fallback`` matrix, cells whose score is zero rank below every
    positive cell and are ordered among themselves by the fallback score.
    Returns the picked ``(source, target, score)`` triples and how many
    pairs short of ``n`` the selection fell.
    """
    rows, cols = sim.row_alive.copy(), sim.col_alive.copy()
    if fallback is None:
        picks = _greedy(sim.scores, rows, cols, n)
    else:
        if fallback.shape != sim.shape:
            raise ContractError("fallback matrix has a different shape")
        picks = _greedy(sim.scores, rows, cols, n, valid=sim.scores > 0)
        for r, c in picks:
            rows[r] = False
            cols[c] = False
        picks += _greedy(fallback.scores, rows, cols, n - len(picks))
    out = [(r, c, float(sim.scores[r, c])) for r, c in picks]
    if len(out) < n:
        log.warning("only %d of %d requested pairs could be selected", len(out), n)
    return Selection(out, n - len(out))


def rank_fallback(sim_fused, sim_emb):
    """Full greedy selection order under the two-tier (fused, then embedding) ranking."""
    n = min(int(sim_fused.row_alive.sum()), int(sim_fused.col_alive.sum()))
    return [(s, t) for s, t, _ in select_top_n(sim_fused, n, fallback=sim_emb).pairs]


# --------------------------------------------------------------------------
# the alignment loop


def _oriented(g_s, g_t, seeds):
    """Make the larger graph the source; report whether a swap happened."""
    if g_s.n >= g_t.n:
        return g_s, g_t, seeds, False
    return g_t, g_s, seeds.swapped(), True


def _budget(g_s, g_t, seeds, pair_budget):
    room = min(g_s.n, g_t.n) - len(seeds)
    if pair_budget is None:
        return room
    if pair_budget < 0 or pair_budget > room:
        raise ContractError(f"pair budget {pair_budget} exceeds the {room} nodes left to align")
    return int(pair_budget)


class GradualAligner:
    """One alignment run. ``align`` and ``align_ea`` are thin wrappers around it.

    Subclasses can override :meth:`after_round` to evolve the graphs between
    rounds; it returns True when the embedding similarity must be recomputed.
    """

    def __init__(self, g_s, g_t, seeds, cfg, pair_budget=None):
        seeds = seeds if seeds is not None else GroundTruth(np.empty((0, 2)))
        seeds.check_against(g_s, g_t)
        self.cfg = cfg
        self.g_s, self.g_t, self.seeds, self.swapped = _oriented(g_s, g_t, seeds)
        self.alpha = cfg.resolved_alpha(self.g_s.n, self.g_t.n)
        self.plan = MatchPlan(_budget(self.g_s, self.g_t, self.seeds, pair_budget),
                              1 if cfg.variant == "ablation-1" else cfg.iter)
        self.params = None
        self.emb = None

    # similarity pieces ---------------------------------------------------

    def uses_embedding(self):
        return self.cfg.variant != "ablation-2"

    def uses_tversky(self):
        return self.cfg.variant != "ablation-3"

    def fit_encoder(self, init=None, epochs=None):
        self.params = train(self.g_s, self.g_t, self.cfg, init=init, epochs=epochs)

    def embedding(self):
        shape = (self.g_s.n, self.g_t.n)
        if not self.uses_embedding():
            return SimilarityMatrix(np.ones(shape))
        hs = forward(self.g_s, self.params, aggregator=self.cfg.aggregator)
        ht = forward(self.g_t, self.params, aggregator=self.cfg.aggregator)
        return embedding_similarity(hs, ht, self.cfg.normalize_embeddings)

    def combined(self, mapping, first=False):
        emb = SimilarityMatrix(self.emb.scores, *mapping.alive_masks(*self.emb.shape))
        if not self.uses_tversky() or (first and len(mapping) == 0):
            return emb
        tve = tversky_similarity(self.g_s, self.g_t, mapping, self.alpha, self.cfg.beta)
        return fuse(emb, tve)

    # loop ----------------------------------------------------------------

    def after_round(self, i, mapping, sim):
        return False

    def run(self):
        if self.uses_embedding():
            self.fit_encoder()
        self.emb = self.embedding()
        mapping = NodeMapping(self.seeds)
        sim = self.combined(mapping, first=True)
        fallback = self.cfg.zero_fallback and self.uses_tversky()
        for i, n in enumerate(self.plan.round_sizes(), start=1):
            emb_live = SimilarityMatrix(self.emb.scores, sim.row_alive, sim.col_alive)
            sel = select_top_n(sim, n, fallback=emb_live if fallback else None)
            for s, t, score in sel.pairs:
                mapping.add(s, t, origin=f"iter-{i}", score=score)
            if sel.shortfall:
                break
            if self.after_round(i, mapping, sim):
                self.emb = self.embedding()
            sim = self.combined(mapping)
        self.mapping, self.similarity = mapping, sim
        if self.swapped:
            return mapping.swapped(), sim.transposed()
        return mapping, sim


def align(g_s, g_t, seeds, cfg=None, pair_budget=None):
    """Align ``g_s`` to ``g_t`` starting from ``seeds``.

    Returns the final mapping (seeds included) and the final fused
    similarity matrix, both oriented as the inputs. ``pair_budget`` defaults
    to every node the smaller graph has left after the seeds.
    """
    cfg = cfg or AlignConfig()
    if cfg.variant == "grad-align-ea":
        from .augment import align_ea
        return align_ea(g_s, g_t, seeds, cfg, pair_budget)
    return GradualAligner(g_s, g_t, seeds, cfg, pair_budget).run()
