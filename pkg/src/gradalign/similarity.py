"""Embedding similarity, Tversky set similarity and their element-wise fusion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ContractError


@dataclass
class SimilarityMatrix:
    """Dense ``n_s x n_t`` scores plus liveness masks for unaligned nodes."""

    scores: np.ndarray
    row_alive: np.ndarray = None
    col_alive: np.ndarray = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2:
            raise ContractError("scores must be a matrix")
        n_s, n_t = self.scores.shape
        if self.row_alive is None:
            self.row_alive = np.ones(n_s, dtype=bool)
        if self.col_alive is None:
            self.col_alive = np.ones(n_t, dtype=bool)
        self.row_alive = np.asarray(self.row_alive, dtype=bool)
        self.col_alive = np.asarray(self.col_alive, dtype=bool)
        if self.row_alive.shape != (n_s,) or self.col_alive.shape != (n_t,):
            raise ContractError("mask lengths do not match the score matrix")

    @property
    def shape(self):
        return self.scores.shape

    def with_masks_of(self, mapping):
        self.row_alive, self.col_alive = mapping.alive_masks(*self.shape)
        return self

    def transposed(self):
        return SimilarityMatrix(self.scores.T.copy(), self.col_alive.copy(), self.row_alive.copy())


class NodeMapping:
    """Growing partial one-to-one map from source ids to target ids.

    Every entry remembers where it came from: ``"seed"`` for prior anchors or
    ``"iter-i"`` for pairs found at matching iteration ``i``, plus the score
    it was selected with.
    """

    def __init__(self, seeds=()):
        self.forward = {}
        self.inverse = {}
        self.origin = {}
        self.score = {}
        for s, t in seeds:
            self.add(int(s), int(t), origin="seed", score=float("nan"))

    def __len__(self):
        return len(self.forward)

    def __contains__(self, s):
        return s in self.forward

    def __iter__(self):
        return iter(sorted(self.forward.items()))

    @property
    def seeds(self):
        return {s for s, o in self.origin.items() if o == "seed"}

    def is_seed(self, s):
        return self.origin.get(s) == "seed"

    def add(self, s, t, origin, score=float("nan")):
        if s in self.forward or t in self.inverse:
            raise ContractError(f"pair ({s}, {t}) conflicts with an existing correspondence")
        self.forward[s] = t
        self.inverse[t] = s
        self.origin[s] = origin
        self.score[s] = score

    def pairs(self):
        return np.array(sorted(self.forward.items()), dtype=np.int64).reshape(-1, 2)

    def alive_masks(self, n_s, n_t):
        rows = np.ones(n_s, dtype=bool)
        cols = np.ones(n_t, dtype=bool)
        if self.forward:
            p = self.pairs()
            rows[p[:, 0]] = False
            cols[p[:, 1]] = False
        return rows, cols

    def as_matrix(self, n_s, n_t):
        """Sparse partial-permutation matrix ``P`` with ``P[s, t] = 1``."""
        p = self.pairs()
        return sp.csr_matrix((np.ones(len(p)), (p[:, 0], p[:, 1])), shape=(n_s, n_t))

    def swapped(self):
        out = NodeMapping()
        for s, t in self.forward.items():
            out.add(t, s, self.origin[s], self.score[s])
        return out

    def copy(self):
        out = NodeMapping()
        for s, t in self.forward.items():
            out.add(s, t, self.origin[s], self.score[s])
        return out


# --------------------------------------------------------------------------
# set similarity on explicit sets / counts


def tversky_index(x, y, alpha, beta):
    """Tversky index ``|X & Y| / (|X & Y| + alpha |X - Y| + beta |Y - X|)``; 0 if both empty."""
    x, y = set(x), set(y)
    return tversky_from_counts(len(x - y), len(y - x), len(x & y), alpha, beta)


def tversky_from_counts(a, b, c, alpha, beta):
    """Tversky index from ``a = |X - Y|``, ``b = |Y - X|`` and ``c = |X & Y|``.

    Works elementwise on arrays. Cells whose denominator is zero score 0.
    """
    a, b, c = (np.asarray(v, dtype=np.float64) for v in (a, b, c))
    denom = c + alpha * a + beta * b
    out = np.divide(c, denom, out=np.zeros(np.broadcast(a, b, c).shape), where=denom > 0)
    return out if out.ndim else float(out)


def jaccard_index(x, y):
    return tversky_index(x, y, 1.0, 1.0)


# --------------------------------------------------------------------------
# similarity matrices


def _unit_rows(h):
    norms = np.linalg.norm(h, axis=1, keepdims=True)
    return np.divide(h, norms, out=np.zeros_like(h), where=norms > 0)


def embedding_similarity(stack_s, stack_t, normalize=True):
    """Multi-layer embedding similarity ``sum_l H_s^(l) H_t^(l)^T``.

    With ``normalize`` each layer's rows are scaled to unit length first and
    the summed matrix is clamped at zero.
    """
    if len(stack_s) != len(stack_t):
        raise ContractError("stacks have different layer counts")
    if not stack_s:
        raise ContractError("empty layer stack")
    n_s, n_t = stack_s[0].shape[0], stack_t[0].shape[0]
    out = np.zeros((n_s, n_t))
    for hs, ht in zip(stack_s, stack_t):
        if hs.shape[1] != ht.shape[1]:
            raise ContractError("hidden dimensions differ between stacks")
        if normalize:
            hs, ht = _unit_rows(hs), _unit_rows(ht)
        out += hs @ ht.T
    if normalize:
        np.maximum(out, 0.0, out=out)
    return SimilarityMatrix(out)


def acn_counts(g_s, g_t, mapping):
    """``C[u, v]`` = number of aligned neighbours ``x`` of ``u`` with ``pi(x)`` adjacent to ``v``."""
    p = mapping.as_matrix(g_s.n, g_t.n)
    return (g_s.adjacency @ p @ g_t.adjacency).toarray()


def tversky_similarity(g_s, g_t, mapping, alpha, beta=1.0):
    """Tversky similarity of every cross-network node pair under ``mapping``.

    For source node ``u`` the set ``X_u`` holds its unaligned neighbours plus
    the images of its aligned neighbours; ``Y_v`` is the neighbourhood of
    target node ``v``. Only images can be shared, so ``|X_u & Y_v|`` is the
    ACN count, ``|X_u| = deg(u)`` and ``|Y_v| = deg(v)``.
    """
    if not (alpha > 0 and beta > 0):
        raise ContractError("alpha and beta must be positive")
    c = acn_counts(g_s, g_t, mapping)
    a = g_s.degrees[:, None] - c
    b = g_t.degrees[None, :] - c
    sim = SimilarityMatrix(tversky_from_counts(a, b, c, alpha, beta))
    return sim.with_masks_of(mapping)


def jaccard_similarity(g_s, g_t, mapping):
    return tversky_similarity(g_s, g_t, mapping, 1.0, 1.0)


def fuse(emb, tve):
    """Element-wise product of two similarity matrices."""
    if emb.shape != tve.shape:
        raise ContractError(f"shape mismatch {emb.shape} vs {tve.shape}")
    if not (np.array_equal(emb.row_alive, tve.row_alive)
            and np.array_equal(emb.col_alive, tve.col_alive)):
        raise ContractError("liveness masks differ")
    return SimilarityMatrix(emb.scores * tve.scores, emb.row_alive.copy(), emb.col_alive.copy())


def save_matrix(sim, path):
    """Text dump, one row per line, round-trippable decimals."""
    scores = sim.scores if isinstance(sim, SimilarityMatrix) else np.asarray(sim)
    np.savetxt(path, scores, fmt="%.17g", delimiter=" ")


def load_matrix(path):
    return SimilarityMatrix(np.loadtxt(path, ndmin=2))
