"""Graph representation, text ingestion and synthetic noisy copies.

Node ids are dense integers ``0..n-1``. When a graph is read from disk the
original tokens are kept in ``Graph.node_labels`` so alignments can be
reported in the caller's vocabulary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConsistencyError, ContractError, ParseError

log = logging.getLogger(__name__)


def _canonical_edges(edges, n):
    """Return a sorted ``(m, 2)`` int array with ``u < v`` and no duplicates."""
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ContractError(f"edge endpoint outside [0, {n})")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ContractError("self-loops are not allowed")
    arr = np.sort(arr, axis=1)
    arr = np.unique(arr, axis=0)
    return arr.reshape(-1, 2)


@dataclass(frozen=True, eq=False)
class Graph:
    """An undirected, unweighted, attributed graph without self-loops.

    Parameters
    ----------
    n : int
        Number of nodes.
    edges : array_like of shape (m, 2)
        Unordered node pairs. Duplicates and orientation are normalised away.
    attributes : array_like of shape (n, d), optional
        Node attribute matrix. Defaults to a column of ones.
    node_labels : sequence of str, optional
        External token for every dense id.
    """

    n: int
    edges: np.ndarray
    attributes: np.ndarray = None
    node_labels: tuple = None
    _index: dict = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if int(self.n) < 1:
            raise ContractError("a graph needs at least one node")
        object.__setattr__(self, "n", int(self.n))
        edges = _canonical_edges(self.edges, self.n)
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

        if self.attributes is None:
            attrs = np.ones((self.n, 1))
        else:
            attrs = np.array(self.attributes, dtype=np.float64)
            if attrs.ndim == 1:
                attrs = attrs[:, None]
        if attrs.ndim != 2 or attrs.shape[0] != self.n or attrs.shape[1] < 1:
            raise ContractError(
                f"attribute matrix must be {self.n} x d with d >= 1, got {attrs.shape}")
        attrs.setflags(write=False)
        object.__setattr__(self, "attributes", attrs)

        if self.node_labels is not None:
            labels = tuple(str(t) for t in self.node_labels)
            if len(labels) != self.n or len(set(labels)) != self.n:
                raise ContractError("node_labels must hold n distinct tokens")
            object.__setattr__(self, "node_labels", labels)
            object.__setattr__(self, "_index", {t: i for i, t in enumerate(labels)})

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_features(self):
        return self.attributes.shape[1]

    @cached_property
    def adjacency(self):
        """Symmetric CSR adjacency matrix with unit weights."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.ones(len(rows))
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def degrees(self):
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def label(self, i):
        """External token of dense id ``i`` (the id itself when unlabeled)."""
        return self.node_labels[i] if self.node_labels is not None else str(i)

    def index_of(self, token):
        """Dense id of an external token."""
        if self._index is None:
            i = int(token)
            if not 0 <= i < self.n:
                raise KeyError(token)
            return i
        return self._index[str(token)]

    def has_edge(self, u, v):
        return self.adjacency[u, v] != 0

    def with_edges(self, edges):
        """Copy of this graph with a different edge set."""
        return Graph(self.n, edges, self.attributes, self.node_labels)

    def permuted(self, perm):
        """Relabel node ``u`` as ``perm[u]``."""
        perm = np.asarray(perm, dtype=np.int64)
        attrs = np.empty_like(self.attributes)
        attrs[perm] = self.attributes
        return Graph(self.n, perm[self.edges], attrs)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """One-to-one correspondences ``(source_id, target_id)``."""

    pairs: np.ndarray

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2).copy()
        if len(np.unique(pairs[:, 0])) != len(pairs) or len(np.unique(pairs[:, 1])) != len(pairs):
            raise ContractError("ground-truth pairs must be one-to-one")
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return (tuple(int(x) for x in p) for p in self.pairs)

    @property
    def M(self):
        return len(self.pairs)

    def as_dict(self):
        return {int(s): int(t) for s, t in self.pairs}

    def swapped(self):
        return GroundTruth(self.pairs[:, ::-1])

    def check_against(self, g_s, g_t):
        if len(self) > min(g_s.n, g_t.n):
            raise ContractError("more ground-truth pairs than nodes")
        if len(self) and (self.pairs[:, 0].max() >= g_s.n or self.pairs[:, 1].max() >= g_t.n
                          or self.pairs.min() < 0):
            raise ContractError("ground-truth id out of range")


def neighbors(g, u):
    """One-hop neighbourhood of ``u`` as a set of node ids."""
    if not 0 <= u < g.n:
        raise ContractError(f"node {u} outside [0, {g.n})")
    adj = g.adjacency
    return set(adj.indices[adj.indptr[u]:adj.indptr[u + 1]].tolist())


# --------------------------------------------------------------------------
# text formats


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split()


def _token_order(tokens):
    # numeric tokens sort numerically so that re-serialised files reload to the same ids
    tokens = list(tokens)
    try:
        return sorted(tokens, key=int)
    except ValueError:
        return sorted(tokens)


def read_edge_tokens(path):
    pairs, loops = [], 0
    for lineno, parts in _lines(path):
        if len(parts) != 2:
            raise ParseError(path, lineno, f"expected 2 tokens, got {len(parts)}")
        a, b = parts
        if a == b:
            loops += 1
            continue
        pairs.append((a, b))
    if loops:
        log.warning("%s: dropped %d self-loop line(s)", path, loops)
    return pairs, loops


def read_attribute_rows(path):
    rows, width = {}, None
    for lineno, parts in _lines(path):
        if len(parts) < 2:
            raise ParseError(path, lineno, "expected a token followed by values")
        token, values = parts[0], parts[1:]
        try:
            vec = [float(x) for x in values]
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if width is None:
            width = len(vec)
        elif len(vec) != width:
            raise ParseError(path, lineno, f"expected {width} values, got {len(vec)}")
        if token in rows:
            raise ParseError(path, lineno, f"duplicate attribute row for {token!r}")
        rows[token] = vec
    return rows


def load_graph(edge_file, attr_file=None):
    """Read a graph from an edge list and an optional attribute file.

    Tokens are mapped to dense ids in sorted order (numerically when every
    token is an integer). Nodes present only in the attribute file become
    isolated nodes. Without an attribute file every node gets the attribute
    vector ``[1.0]``.
    """
    pairs, _ = read_edge_tokens(edge_file)
    tokens = {t for p in pairs for t in p}
    rows = None
    if attr_file is not None:
        rows = read_attribute_rows(attr_file)
        missing = tokens - rows.keys()
        if missing:
            raise ConsistencyError(
                f"{attr_file}: no attribute row for {len(missing)} node(s), "
                f"e.g. {sorted(missing)[:3]}")
        tokens |= rows.keys()
    if not tokens:
        raise ConsistencyError(f"{edge_file}: graph has no nodes")
    labels = _token_order(tokens)
    index = {t: i for i, t in enumerate(labels)}
    edges = np.array([(index[a], index[b]) for a, b in pairs], dtype=np.int64).reshape(-1, 2)
    attrs = None
    if rows is not None:
        attrs = np.array([rows[t] for t in labels], dtype=np.float64)
    return Graph(len(labels), edges, attrs, labels)


def save_graph(g, edge_file, attr_file=None):
    """Write ``g`` in the canonical edge order, plus attributes if requested."""
    with open(edge_file, "w", encoding="utf-8") as fh:
        for u, v in g.edges:
            fh.write(f"{g.label(u)} {g.label(v)}\n")
    if attr_file is not None:
        with open(attr_file, "w", encoding="utf-8") as fh:
            for i in range(g.n):
                vals = " ".join(repr(float(x)) for x in g.attributes[i])
                fh.write(f"{g.label(i)} {vals}\n")


def load_ground_truth(path, g_s=None, g_t=None):
    """Read ``source target`` token pairs, translating through the graphs' labels."""
    pairs = []
    for lineno, parts in _lines(path):
        if len(parts) != 2:
            raise ParseError(path, lineno, f"expected 2 tokens, got {len(parts)}")
        try:
            s = g_s.index_of(parts[0]) if g_s is not None else int(parts[0])
            t = g_t.index_of(parts[1]) if g_t is not None else int(parts[1])
        except (KeyError, ValueError):
            raise ConsistencyError(f"{path}:{lineno}: unknown node in {parts}") from None
        pairs.append((s, t))
    gt = GroundTruth(np.array(pairs, dtype=np.int64).reshape(-1, 2))
    if g_s is not None and g_t is not None:
        gt.check_against(g_s, g_t)
    return gt


def save_ground_truth(gt, path, g_s=None, g_t=None):
    with open(path, "w", encoding="utf-8") as fh:
        for s, t in gt:
            a = g_s.label(s) if g_s is not None else s
            b = g_t.label(t) if g_t is not None else t
            fh.write(f"{a} {b}\n")


# --------------------------------------------------------------------------
# synthetic instances


def erdos_renyi(n, p=None, m=None, d=None, seed=0):
    """Random G(n, p) or G(n, m) graph.

    With ``d`` set, node attributes are i.i.d. standard normal rows, which are
    distinct with probability one; otherwise the all-ones default is used.
    """
    rng = np.random.default_rng(seed)
    total = n * (n - 1) // 2
    if m is None:
        if p is None:
            raise ContractError("give either p or m")
        m = rng.binomial(total, p)
    m = int(min(m, total))
    flat = rng.choice(total, size=m, replace=False)
    iu, iv = np.triu_indices(n, k=1)
    u, v = iu[flat], iv[flat]
    attrs = rng.standard_normal((n, d)) if d else None
    return Graph(n, np.column_stack([u, v]), attrs)


def make_noisy_copy(g, edge_noise=0.0, attr_noise=0.0, rng_seed=0):
    """Perturbed, relabelled copy of ``g`` together with the true correspondence.

    ``floor(edge_noise * |E|)`` edges are removed uniformly without
    replacement and the attribute rows of ``floor(attr_noise * n)`` uniformly
    chosen nodes are zeroed. Node ids are then shuffled by a random
    permutation; the returned ground truth maps every original node to its
    new id.
    """
    if not (0.0 <= edge_noise <= 1.0 and 0.0 <= attr_noise <= 1.0):
        raise ContractError("noise fractions must lie in [0, 1]")
    rng = np.random.default_rng(rng_seed)
    m = g.num_edges
    n_drop = math.floor(edge_noise * m)
    order = rng.permutation(m)
    keep = np.sort(order[n_drop:])
    edges = g.edges[keep]

    attrs = np.array(g.attributes)
    n_zero = math.floor(attr_noise * g.n)
    if n_zero:
        attrs[rng.choice(g.n, size=n_zero, replace=False)] = 0.0

    perm = rng.permutation(g.n)
    copy = Graph(g.n, edges, attrs).permuted(perm)
    gt = GroundTruth(np.column_stack([np.arange(g.n), perm]))
    return copy, gt


def split_seeds(gt, t, rng_seed=0):
    """Draw ``floor(t * M)`` prior seed pairs; the rest are for evaluation."""
    if not 0.0 <= t <= 1.0:
        raise ContractError("seed fraction t must lie in [0, 1]")
    rng = np.random.default_rng(rng_seed)
    k = math.floor(t * len(gt))
    chosen = np.zeros(len(gt), dtype=bool)
    chosen[rng.permutation(len(gt))[:k]] = True
    return GroundTruth(gt.pairs[chosen]), GroundTruth(gt.pairs[~chosen])
