"""Shared-weight message-passing encoder and its layer-wise reconstruction loss.

One :class:`EncoderParams` instance encodes both graphs, so isomorphic
graphs with matching attributes receive identical rows layer by layer.
Gradients are derived by hand; ``tests/test_encoder.py`` checks them against
central finite differences.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ContractError, NumericalError
from .optim import Adam

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
DENSE_LIMIT = 2000
_GUARD = 1e-12


@dataclass
class EncoderParams:
    """Per-layer weights of a GIN or GCN encoder.

    GIN layer ``l`` holds ``Wa`` (h_in x h) and ``Wb`` (h x h) forming the
    two-layer perceptron ``relu(z @ Wa) @ Wb``; GCN layer ``l`` holds a single
    ``W`` (h_in x h). ``eps`` is GIN's fixed self-weight offset.
    """

    model: str
    weights: dict
    num_layers: int
    input_dim: int
    hidden_dim: int
    eps: float = 0.0
    loss_history: list = field(default_factory=list)

    def layer(self, l):
        keys = ("Wa", "Wb") if self.model == "gin" else ("W",)
        return [self.weights[f"{l}.{k}"] for k in keys]

    def copy(self):
        return EncoderParams(self.model, {k: v.copy() for k, v in self.weights.items()},
                             self.num_layers, self.input_dim, self.hidden_dim, self.eps,
                             list(self.loss_history))


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(input_dim, hidden_dim=150, num_layers=2, model="gin", seed=0):
    """Glorot-uniform weights drawn from ``np.random.default_rng(seed)``."""
    if model not in ("gin", "gcn"):
        raise ContractError(f"unknown model {model!r}")
    rng = np.random.default_rng(seed)
    weights = {}
    h_in = input_dim
    for l in range(num_layers):
        if model == "gin":
            weights[f"{l}.Wa"] = _glorot(rng, h_in, hidden_dim)
            weights[f"{l}.Wb"] = _glorot(rng, hidden_dim, hidden_dim)
        else:
            weights[f"{l}.W"] = _glorot(rng, h_in, hidden_dim)
        h_in = hidden_dim
    return EncoderParams(model, weights, num_layers, input_dim, hidden_dim)


# --------------------------------------------------------------------------
# aggregation operators


class _Propagator:
    """Neighbourhood operators of one graph, precomputed once per edge set."""

    def __init__(self, adjacency, model, aggregator):
        self.model = model
        self.aggregator = aggregator
        adj = sp.csr_matrix(adjacency, dtype=np.float64)
        self.n = adj.shape[0]
        self.adj = adj
        deg = np.asarray(adj.sum(axis=1)).ravel()
        if model == "gcn":
            a_hat = adj + sp.identity(self.n, format="csr")
            d = np.asarray(a_hat.sum(axis=1)).ravel()
            s = sp.diags(1.0 / np.sqrt(d))
            self.op = (s @ a_hat @ s).tocsr()
        elif aggregator == "sum":
            self.op = adj
        elif aggregator == "mean":
            inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
            self.op = (sp.diags(inv) @ adj).tocsr()
            self.op_t = self.op.T.tocsr()
        else:
            self.op = None

    def forward(self, x):
        if self.op is not None:
            return self.op @ x, None
        out = np.zeros_like(x)
        arg = np.full(x.shape, -1, dtype=np.int64)
        ptr, idx = self.adj.indptr, self.adj.indices
        for u in range(self.n):
            nb = idx[ptr[u]:ptr[u + 1]]
            if len(nb):
                j = np.argmax(x[nb], axis=0)
                arg[u] = nb[j]
                out[u] = x[nb[j], np.arange(x.shape[1])]
        return out, arg

    def backward(self, g, arg):
        if self.op is not None:
            if self.model == "gin" and self.aggregator == "mean":
                return self.op_t @ g
            # symmetric operators
            return self.op @ g
        out = np.zeros_like(g)
        rows, cols = np.nonzero(arg >= 0)
        np.add.at(out, (arg[rows, cols], cols), g[rows, cols])
        return out


def _check_finite(h, l):
    if not np.all(np.isfinite(h)):
        raise NumericalError("non-finite hidden representation", layer=l + 1)


def _forward(g, params, aggregator="sum", prop=None):
    x = g.attributes
    if x.shape[1] != params.input_dim:
        raise ContractError(
            f"graph has {x.shape[1]} attribute columns, encoder expects {params.input_dim}")
    if prop is None:
        prop = _Propagator(g.adjacency, params.model, aggregator)
    reps, cache = [], []
    h = x
    for l in range(params.num_layers):
        if params.model == "gin":
            wa, wb = params.layer(l)
            agg, arg = prop.forward(h)
            z = (1.0 + params.eps) * h + agg
            a = z @ wa
            r = np.maximum(a, 0.0)
            out = r @ wb
            cache.append((h, z, a, r, arg))
        else:
            (w,) = params.layer(l)
            p, _ = prop.forward(h)
            out = np.tanh(p @ w)
            cache.append((h, p, out))
        _check_finite(out, l)
        reps.append(out)
        h = out
    return reps, cache, prop


def forward(g, params, model=None, aggregator="sum"):
    """Hidden representations ``[H^(1), ..., H^(L)]`` of graph ``g``.

    GIN: ``h_u <- relu(((1+eps) h_u + AGG_{x in N(u)} h_x) @ Wa) @ Wb``.
    GCN: ``H <- tanh(D^-1/2 (A+I) D^-1/2 H W)``; ``aggregator`` is ignored.
    """
    if model is not None and model != params.model:
        raise ContractError(f"params were built for {params.model!r}, not {model!r}")
    reps, _, _ = _forward(g, params, aggregator)
    return reps


def _backward(params, cache, prop, grads_h):
    """Accumulate weight gradients given dLoss/dH^(l) for every layer."""
    out = {}
    g = np.zeros_like(grads_h[-1])
    for l in reversed(range(params.num_layers)):
        g = g + grads_h[l]
        if params.model == "gin":
            wa, wb = params.layer(l)
            h, z, a, r, arg = cache[l]
            out[f"{l}.Wb"] = r.T @ g
            ga = (g @ wb.T) * (a > 0)
            out[f"{l}.Wa"] = z.T @ ga
            gz = ga @ wa.T
            g = (1.0 + params.eps) * gz + prop.backward(gz, arg)
        else:
            (w,) = params.layer(l)
            h, p, y = cache[l]
            gp = g * (1.0 - y * y)
            out[f"{l}.W"] = p.T @ gp
            g = prop.backward(gp @ w.T, None)
    return out


# --------------------------------------------------------------------------
# reconstruction targets and loss


@dataclass
class AggregatedAdjacency:
    """Normalised targets ``D^-1/2 (sum_{k<=l} (A+I)^k) D^-1/2`` for ``l = 1..L``."""

    mats: list

    def __len__(self):
        return len(self.mats)

    @property
    def n(self):
        return self.mats[0].shape[0]

    @property
    def is_sparse(self):
        return sp.issparse(self.mats[0])


def build_targets(g, num_layers, dense=None):
    """Layer-wise reconstruction targets of ``g``.

    Dense arrays are returned for graphs below ``DENSE_LIMIT`` nodes (or when
    ``dense=True``); CSR matrices otherwise.
    """
    if num_layers < 1:
        raise ContractError("need at least one layer")
    adj = g.adjacency
    n = adj.shape[0]
    if dense is None:
        dense = n < DENSE_LIMIT
    a_hat = (sp.csr_matrix(adj, dtype=np.float64) + sp.identity(n, format="csr")).tocsr()
    power = a_hat
    acc = a_hat.copy()
    mats = []
    for l in range(num_layers):
        if l > 0:
            power = (power @ a_hat).tocsr()
            acc = (acc + power).tocsr()
        deg = np.asarray(acc.sum(axis=1)).ravel()
        s = sp.diags(1.0 / np.sqrt(deg))
        t = (s @ acc @ s).tocsr()
        mats.append(t.toarray() if dense else t)
    return AggregatedAdjacency(mats)


def _layer_term(t, h, squared):
    """Value of ||T - H H^T||_F (or its square) and the gradient wrt H."""
    if sp.issparse(t):
        hth = h.T @ h
        th = t @ h
        sq = t.multiply(t).sum() - 2.0 * np.sum(h * th) + np.sum(hth * hth)
        sq = max(float(sq), 0.0)
        dsq = -4.0 * th + 4.0 * (h @ hth)
    else:
        r = t - h @ h.T
        sq = float(np.sum(r * r))
        dsq = -4.0 * (r @ h)
    if squared:
        return sq, dsq
    norm = np.sqrt(sq)
    return norm, dsq / (2.0 * np.sqrt(sq + _GUARD))


def _graph_loss(reps, targets, squared):
    if len(reps) != len(targets):
        raise ContractError("layer count of stack and targets differ")
    total, grads = 0.0, []
    for h, t in zip(reps, targets.mats):
        if h.shape[0] != t.shape[0]:
            raise ContractError("node count of stack and targets differ")
        v, gh = _layer_term(t, h, squared)
        total += v
        grads.append(gh)
    return total, grads


def reconstruction_loss(stack_s, stack_t, targets_s, targets_t, squared=False):
    """Sum over both graphs and all layers of ``||T^(l) - H^(l) H^(l)^T||_F``.

    The norm is not squared unless ``squared=True``.
    """
    ls, _ = _graph_loss(stack_s, targets_s, squared)
    lt, _ = _graph_loss(stack_t, targets_t, squared)
    return ls + lt


def loss_and_grads(params, g_s, g_t, targets_s, targets_t, aggregator="sum",
                   squared=False, props=(None, None)):
    """Loss value and its gradient with respect to every weight matrix."""
    total = 0.0
    grads = {k: np.zeros_like(v) for k, v in params.weights.items()}
    for g, targets, prop in ((g_s, targets_s, props[0]), (g_t, targets_t, props[1])):
        reps, cache, prop = _forward(g, params, aggregator, prop)
        val, gh = _graph_loss(reps, targets, squared)
        total += val
        for k, v in _backward(params, cache, prop, gh).items():
            grads[k] += v
    return total, grads


def train(g_s, g_t, cfg, init=None, epochs=None, targets=None):
    """Fit encoder weights to both graphs with Adam.

    Starts from ``init`` when given (fine-tuning), otherwise from the seeded
    Glorot initialisation. Stops after ``epochs`` (default ``cfg.epochs``) or
    once the relative loss improvement over ``cfg.patience`` epochs drops
    below ``cfg.tol``.
    """
    if g_s.num_features != g_t.num_features:
        raise ContractError("both graphs need the same number of attribute columns")
    params = init.copy() if init is not None else init_params(
        g_s.num_features, cfg.hidden_dim, cfg.k, cfg.model, cfg.rng_seed)
    params.loss_history = []
    epochs = cfg.epochs if epochs is None else epochs
    if epochs == 0:
        return params
    if targets is None:
        targets = (build_targets(g_s, cfg.k), build_targets(g_t, cfg.k))
    props = (_Propagator(g_s.adjacency, params.model, cfg.aggregator),
             _Propagator(g_t.adjacency, params.model, cfg.aggregator))
    opt = Adam(lr=cfg.learning_rate)
    history = params.loss_history
    for epoch in range(epochs):
        loss, grads = loss_and_grads(params, g_s, g_t, *targets, aggregator=cfg.aggregator,
                                     squared=cfg.squared_loss, props=props)
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise NumericalError(
                f"training diverged at epoch {epoch} (lr={cfg.learning_rate}); "
                "retry with a lower learning rate")
        history.append(loss)
        if len(history) > cfg.patience:
            old = history[-1 - cfg.patience]
            # a transient rise (Adam overshoot) is not convergence
            if old > 0 and 0.0 <= (old - loss) / old < cfg.tol:
                log.debug("converged at epoch %d, loss %.6g", epoch, loss)
                break
        opt.step(params.weights, grads)
    else:
        # loss of the final weights
        history.append(reconstruction_loss(
            _forward(g_s, params, cfg.aggregator, props[0])[0],
            _forward(g_t, params, cfg.aggregator, props[1])[0], *targets,
            squared=cfg.squared_loss))
    return params


# --------------------------------------------------------------------------
# checkpoints


def save_params(params, path):
    """Write weights plus layer shapes to an ``.npz`` file."""
    meta = np.array([CHECKPOINT_VERSION, params.num_layers, params.input_dim, params.hidden_dim])
    np.savez(path, __meta__=meta, __model__=np.array(params.model),
             __eps__=np.array(params.eps), **params.weights)


def load_params(path):
    with np.load(path, allow_pickle=False) as f:
        version, num_layers, input_dim, hidden_dim = (int(x) for x in f["__meta__"])
        if version != CHECKPOINT_VERSION:
            raise ContractError(f"unsupported checkpoint version {version}")
        weights = {k: f[k].copy() for k in f.files if not k.startswith("__")}
        return EncoderParams(str(f["__model__"]), weights, num_layers, input_dim,
                             hidden_dim, float(f["__eps__"]))
