"""Kernels between persistence diagrams and Gram-matrix assembly.

Four kernels are provided: sliced Wasserstein (``sw``), persistence scale
space (``pss``), persistence weighted Gaussian (``pwg``) and persistence
Fisher (``pf``). Diagrams are compressed to unique points with
multiplicities before evaluation; all four kernels are linear in the
underlying point measures, so this changes nothing but the cost.

Three of the kernels are ``exp(-c * base)`` for a pairwise base quantity that
does not depend on the outer bandwidth (SW distance, Fisher distance, RKHS
distance). :func:`base_matrix` exposes that quantity so a bandwidth grid
search costs one exponentiation per grid value.

For ``pf`` Gram matrices the smoothing support is fitted once on the
reference diagrams (the rows of :func:`gram`, the columns of
:func:`cross_gram`) rather than per pair; see :func:`fisher_embedding`.
"""
from __future__ import annotations

import hashlib
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numba
import numpy as np
from scipy.spatial.distance import cdist

from .diagrams import read_square_csv, write_square_csv
from .errors import NumericError, ParameterError
from .persistence import PersistenceDiagram

__all__ = [
    "k_sw",
    "k_pss",
    "k_pwg",
    "k_pf",
    "sliced_wasserstein",
    "fisher_distance",
    "fisher_embedding",
    "sw_distance_matrix",
    "pwg_embedding_distance",
    "KernelSpec",
    "GramMatrix",
    "base_matrix",
    "gram",
    "cross_gram",
    "kernel_distance",
    "kernel_distance_matrix",
    "write_gram_csv",
    "read_gram_csv",
    "KERNEL_GRIDS",
]

SW_SLICES = 10

KERNEL_GRIDS = {
    "sw": {"sigma": (0.01, 0.1, 1.0, 10.0, 100.0)},
    "pss": {"t": (0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 100.0, 500.0, 1000.0)},
    "pwg": {"tau": (0.01, 0.1, 1.0, 10.0, 100.0), "K_w": (0.1, 1.0, 10.0), "rho": (0.1, 1.0, 10.0)},
    "pf": {"t": (0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0),
           "tau": (0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0)},
}


# ---------------------------------------------------------------- point handling


def _raw_points(d) -> np.ndarray:
    if isinstance(d, PersistenceDiagram):
        return d.points
    return np.asarray(d, dtype=float).reshape(-1, 2)


def _compress(pts: np.ndarray):
    """Unique points and their multiplicities."""
    if len(pts) == 0:
        return np.zeros((0, 2)), np.zeros(0)
    u, c = np.unique(pts, axis=0, return_counts=True)
    return u, c.astype(float)


def _diag(pts: np.ndarray) -> np.ndarray:
    m = pts.mean(axis=1)
    return np.column_stack([m, m])


def _content_key(pts: np.ndarray) -> bytes:
    return hashlib.blake2b(np.ascontiguousarray(pts, dtype=float).tobytes(), digest_size=16).digest()


# ---------------------------------------------------------------- sliced Wasserstein


def slice_angles(n_slices: int) -> np.ndarray:
    return -np.pi / 2 + np.pi * np.arange(n_slices) / n_slices


def _slice_steps(pts: np.ndarray, mult: np.ndarray, n_slices: int):
    """Per slice: sorted breakpoints and signed jumps of F_D - F_proj(D)."""
    th = slice_angles(n_slices)
    u = np.column_stack([np.cos(th), np.sin(th)])
    proj = pts @ u.T
    dproj = (pts.mean(axis=1)[:, None]) * (u[:, 0] + u[:, 1])[None, :]
    out = []
    for m in range(n_slices):
        x = np.concatenate([proj[:, m], dproj[:, m]])
        w = np.concatenate([mult, -mult])
        xs, inv = np.unique(x, return_inverse=True)
        ws = np.zeros(len(xs))
        np.add.at(ws, inv, w)
        keep = ws != 0
        out.append((xs[keep], ws[keep]))
    return out


@numba.njit(cache=True)
def _step_l1(p1, w1, p2, w2):
    """Integral of |G1 - G2| for right-continuous step functions given by jumps."""
    i = 0
    j = 0
    n1 = p1.shape[0]
    n2 = p2.shape[0]
    h = 0.0
    area = 0.0
    x_prev = 0.0
    started = False
    while i < n1 or j < n2:
        if j >= n2 or (i < n1 and p1[i] <= p2[j]):
            x = p1[i]
            dh = w1[i]
            i += 1
        else:
            x = p2[j]
            dh = -w2[j]
            j += 1
        if started:
            area += abs(h) * (x - x_prev)
        h += dh
        x_prev = x
        started = True
    return area


@numba.njit(cache=True)
def _sw_block(pos, wt, offs, n_slices, rows, cols, symmetric):
    out = np.zeros((rows.shape[0], cols.shape[0]))
    for a in range(rows.shape[0]):
        i = rows[a]
        start = a + 1 if symmetric else 0
        for b in range(start, cols.shape[0]):
            j = cols[b]
            total = 0.0
            for m in range(n_slices):
                si = i * n_slices + m
                sj = j * n_slices + m
                total += _step_l1(pos[offs[si]:offs[si + 1]], wt[offs[si]:offs[si + 1]],
                                  pos[offs[sj]:offs[sj + 1]], wt[offs[sj]:offs[sj + 1]])
            out[a, b] = total / n_slices
            if symmetric:
                out[b, a] = out[a, b]
    return out


def _pack_steps(diagrams, n_slices):
    pos, wt, offs = [], [], [0]
    for d in diagrams:
        for x, w in _slice_steps(*_compress(_raw_points(d)), n_slices):
            pos.append(x)
            wt.append(w)
            offs.append(offs[-1] + len(x))
    cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0)
    return cat(pos), cat(wt), np.asarray(offs, dtype=np.int64)


def sw_distance_matrix(diagrams: Sequence, others: Optional[Sequence] = None, n_slices: int = SW_SLICES) -> np.ndarray:
    """Pairwise sliced Wasserstein distances (rows ``diagrams``, columns ``others``)."""
    if others is None:
        pos, wt, offs = _pack_steps(diagrams, n_slices)
        idx = np.arange(len(diagrams), dtype=np.int64)
        return _sw_block(pos, wt, offs, n_slices, idx, idx, True)
    pos, wt, offs = _pack_steps(list(diagrams) + list(others), n_slices)
    rows = np.arange(len(diagrams), dtype=np.int64)
    cols = np.arange(len(diagrams), len(diagrams) + len(others), dtype=np.int64)
    return _sw_block(pos, wt, offs, n_slices, rows, cols, False)


def sliced_wasserstein(d1, d2, n_slices: int = SW_SLICES) -> float:
    """Mean over ``n_slices`` fixed directions of the 1-D transport cost
    between ``D1 + proj(D2)`` and ``D2 + proj(D1)``."""
    return float(sw_distance_matrix([d1], [d2], n_slices)[0, 0])


def k_sw(d1, d2, sigma: float, n_slices: int = SW_SLICES) -> float:
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    return float(np.exp(-sliced_wasserstein(d1, d2, n_slices) / (2 * sigma ** 2)))


# ---------------------------------------------------------------- scale space


def _sqdist(a, b):
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)


def _oriented(d) -> np.ndarray:
    p = _raw_points(d)
    return np.column_stack([p.min(axis=1), p.max(axis=1)])


def _pss_compressed(a, ca, b, cb, t):
    if len(a) == 0 or len(b) == 0:
        return 0.0
    bm = b[:, ::-1]
    k = np.exp(-_sqdist(a, b) / (8 * t)) - np.exp(-_sqdist(a, bm) / (8 * t))
    return float(ca @ k @ cb) / 8.0


def k_pss(d1, d2, t: float) -> float:
    """Scale-space kernel ``1/8 sum_p sum_q exp(-|p-q|^2/8t) - exp(-|p-qbar|^2/8t)``.

    Points are oriented to birth <= death first.
    """
    if t <= 0:
        raise ParameterError("t must be positive")
    a, ca = _compress(_oriented(d1))
    b, cb = _compress(_oriented(d2))
    return _pss_compressed(a, ca, b, cb, t)


# ---------------------------------------------------------------- persistence weighted Gaussian


def _pwg_weights(pts, mult, K_w, p_w):
    return mult * np.arctan(K_w * np.abs(pts[:, 1] - pts[:, 0]) ** p_w)


def _pwg_inner(a, wa, b, wb, rho):
    if len(a) == 0 or len(b) == 0:
        return 0.0
    return float(wa @ np.exp(-_sqdist(a, b) / (2 * rho ** 2)) @ wb)


def pwg_embedding_distance(d1, d2, rho: float, K_w: float, p_w: float = 1.0) -> float:
    """Squared RKHS distance between the weighted kernel mean embeddings."""
    a, ca = _compress(_raw_points(d1))
    b, cb = _compress(_raw_points(d2))
    wa, wb = _pwg_weights(a, ca, K_w, p_w), _pwg_weights(b, cb, K_w, p_w)
    val = _pwg_inner(a, wa, a, wa, rho) + _pwg_inner(b, wb, b, wb, rho) - 2 * _pwg_inner(a, wa, b, wb, rho)
    return max(val, 0.0)


def k_pwg(d1, d2, rho: float, K_w: float, tau: float, p_w: float = 1.0, squared: bool = True) -> float:
    """``exp(-||mu1 - mu2||^2 / 2 tau^2)``; ``squared=False`` drops the square on the norm."""
    if min(rho, K_w, tau) <= 0:
        raise ParameterError("rho, K_w and tau must be positive")
    dist2 = pwg_embedding_distance(d1, d2, rho, K_w, p_w)
    base = dist2 if squared else np.sqrt(dist2)
    return float(np.exp(-base / (2 * tau ** 2)))


# ---------------------------------------------------------------- persistence Fisher


def _smoothed(support, pts, mult, tau):
    """Normalized Gaussian mixture of ``pts`` sampled on ``support``."""
    rho = np.exp(-_sqdist(support, pts) / (2 * tau ** 2)) @ mult
    total = rho.sum()
    if len(pts) == 0 or total <= 0:
        # an empty diagram has no mass anywhere; spread it evenly
        return np.full(len(support), 1.0 / max(len(support), 1))
    return rho / total


def _self_augmented(a, ca):
    return np.concatenate([a, _diag(a)]), np.concatenate([ca, ca])


def _fisher_compressed(a, ca, b, cb, tau, augment="self"):
    if augment == "cross":
        a_aug, ca_aug = np.concatenate([a, _diag(b)]), np.concatenate([ca, cb])
        b_aug, cb_aug = np.concatenate([b, _diag(a)]), np.concatenate([cb, ca])
    elif augment == "self":
        a_aug, ca_aug = _self_augmented(a, ca)
        b_aug, cb_aug = _self_augmented(b, cb)
    else:
        raise ParameterError(f"augment must be 'self' or 'cross', not {augment!r}")
    if len(a_aug) + len(b_aug) == 0:
        return 0.0
    support = np.unique(np.concatenate([a_aug, b_aug]), axis=0)
    chord = np.linalg.norm(np.sqrt(_smoothed(support, a_aug, ca_aug, tau))
                           - np.sqrt(_smoothed(support, b_aug, cb_aug, tau)))
    # equals arccos of the Bhattacharyya coefficient, without its cancellation
    return float(2.0 * np.arcsin(min(chord / 2.0, 1.0)))


def fisher_distance(d1, d2, tau: float, augment: str = "self") -> float:
    """Fisher information distance between smoothed, diagonal-augmented diagrams.

    Both diagrams are smoothed with Gaussians of bandwidth ``tau`` into
    probability vectors over the union of the augmented point sets, and the
    distance is ``arccos`` of their Bhattacharyya coefficient.

    ``augment="self"`` adds each diagram's own diagonal projections;
    ``augment="cross"`` adds the other diagram's projections instead, which
    balances the masses but makes the embedding depend on the pair.
    """
    if tau <= 0:
        raise ParameterError("tau must be positive")
    return _fisher_compressed(*_compress(_raw_points(d1)), *_compress(_raw_points(d2)), tau, augment)


def k_pf(d1, d2, t: float, tau: float, augment: str = "self") -> float:
    """``exp(-t * fisher_distance(d1, d2, tau))``."""
    if t <= 0:
        raise ParameterError("t must be positive")
    return float(np.exp(-t * fisher_distance(d1, d2, tau, augment)))


def fisher_embedding(items: Sequence, tau: float, reference: Optional[Sequence] = None) -> np.ndarray:
    """Square-root densities of ``items`` on the support fitted to ``reference``.

    The support is the union of the self-augmented points of ``reference``
    (default: ``items``). Rows are unit vectors, so a shared support makes
    ``arccos`` of their inner products a geodesic distance on the sphere and
    the resulting Gram matrix positive semi-definite.
    """
    if tau <= 0:
        raise ParameterError("tau must be positive")
    ref = items if reference is None else reference
    parts = [_self_augmented(*_compress(_raw_points(d)))[0] for d in ref]
    support = np.unique(np.concatenate(parts), axis=0) if parts else np.zeros((0, 2))
    rows = []
    for d in items:
        pts, mult = _self_augmented(*_compress(_raw_points(d)))
        rows.append(np.sqrt(_smoothed(support, pts, mult, tau)))
    return np.array(rows).reshape(len(items), len(support))


# ---------------------------------------------------------------- Gram matrices


@dataclass(frozen=True)
class KernelSpec:
    """Kernel name plus hyperparameters, e.g. ``KernelSpec("sw", sigma=1.0)``."""

    name: str
    params: tuple = ()

    def __init__(self, name: str, **params):
        if name not in KERNEL_GRIDS:
            raise ParameterError(f"unknown kernel {name!r}; choose from {sorted(KERNEL_GRIDS)}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", tuple(sorted(params.items())))

    @property
    def kwargs(self) -> dict:
        return dict(self.params)

    def descriptor(self) -> dict:
        return {"kernel": self.name, **self.kwargs}

    def split(self):
        """``(base key, outer transform)``: the bandwidth-free part and how to finish it."""
        p = self.kwargs
        if self.name == "sw":
            n = int(p.get("n_slices", SW_SLICES))
            return ("sw", n), lambda base: np.exp(-base / (2 * p["sigma"] ** 2))
        if self.name == "pf":
            return ("pf", float(p["tau"])), lambda base: np.exp(-p["t"] * base)
        if self.name == "pwg":
            key = ("pwg", float(p["rho"]), float(p["K_w"]), float(p.get("p_w", 1.0)))
            squared = p.get("squared", True)
            return key, lambda base: np.exp(-(base if squared else np.sqrt(base)) / (2 * p["tau"] ** 2))
        return ("pss", float(p["t"])), lambda base: base


@dataclass
class GramMatrix:
    values: np.ndarray
    descriptor: dict
    item_ids: list = field(default_factory=list)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.values + self.values.T) / 2).min())


def _fisher_matrix(items_a, items_b, tau, symmetric):
    ref = items_a if symmetric else items_b
    pa = fisher_embedding(items_a, tau, ref)
    pb = pa if symmetric else fisher_embedding(items_b, tau, ref)
    # arccos(<pa, pb>) written as a chord-to-arc conversion, which stays
    # accurate for nearly equal rows where arccos loses half the digits
    chord = cdist(pa, pb) if pa.shape[1] else np.zeros((len(pa), len(pb)))
    return 2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0))


def _pairwise(items_a, items_b, key, symmetric):
    name = key[0]
    if name == "sw":
        return sw_distance_matrix(items_a, None if symmetric else items_b, key[1])
    if name == "pf":
        return _fisher_matrix(items_a, items_b, key[1], symmetric)
    orient = name == "pss"
    prep = lambda d: _compress(_oriented(d) if orient else _raw_points(d))
    ca = [prep(d) for d in items_a]
    cb = ca if symmetric else [prep(d) for d in items_b]
    if name == "pwg":
        _, rho, K_w, p_w = key
        wa = [(p, _pwg_weights(p, c, K_w, p_w)) for p, c in ca]
        wb = wa if symmetric else [(p, _pwg_weights(p, c, K_w, p_w)) for p, c in cb]
        sa = np.array([_pwg_inner(p, w, p, w, rho) for p, w in wa])
        sb = sa if symmetric else np.array([_pwg_inner(p, w, p, w, rho) for p, w in wb])
        fn = lambda x, y: _pwg_inner(x[0], x[1], y[0], y[1], rho)
        ca, cb = wa, wb
    else:
        fn = lambda x, y: _pss_compressed(x[0], x[1], y[0], y[1], key[1])
    out = np.zeros((len(ca), len(cb)))
    keys_a = [_content_key(x[0]) + _content_key(x[1]) for x in ca]
    keys_b = keys_a if symmetric else [_content_key(x[0]) + _content_key(x[1]) for x in cb]
    for i in range(len(ca)):
        for j in range(i if symmetric else 0, len(cb)):
            # evaluate in a canonical argument order so that K[i, j] == K[j, i] bitwise
            x, y = (ca[i], cb[j]) if keys_a[i] <= keys_b[j] else (cb[j], ca[i])
            out[i, j] = fn(x, y)
            if symmetric:
                out[j, i] = out[i, j]
    if name == "pwg":
        out = np.maximum(sa[:, None] + sb[None, :] - 2 * out, 0.0)
        if symmetric:
            np.fill_diagonal(out, 0.0)
    return out


class _BaseCache:
    def __init__(self, maxsize=32):
        self.maxsize = maxsize
        self.store = OrderedDict()
        self.hits = 0

    def get(self, key, compute):
        if key in self.store:
            self.store.move_to_end(key)
            self.hits += 1
            return self.store[key]
        val = compute()
        self.store[key] = val
        if len(self.store) > self.maxsize:
            self.store.popitem(last=False)
        return val

    def clear(self):
        self.store.clear()
        self.hits = 0


BASE_CACHE = _BaseCache()


def _items_key(items) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    for d in items:
        h.update(_content_key(_raw_points(d)))
        h.update(b"|")
    return h.digest()


def base_matrix(items: Sequence, spec: KernelSpec, others: Optional[Sequence] = None) -> np.ndarray:
    """Bandwidth-free pairwise matrix for ``spec`` (cached by diagram content)."""
    key, _ = spec.split()
    symmetric = others is None
    cache_key = (key, _items_key(items), None if symmetric else _items_key(others))
    return BASE_CACHE.get(cache_key, lambda: _pairwise(items, others, key, symmetric))


def gram(items: Sequence, spec: KernelSpec, item_ids: Optional[list] = None) -> GramMatrix:
    """Symmetric Gram matrix of ``spec`` over ``items``; each unordered pair is evaluated once."""
    _, finish = spec.split()
    vals = finish(base_matrix(items, spec))
    vals = np.array(vals, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericError(f"non-finite kernel values for {spec.descriptor()}")
    ids = item_ids if item_ids is not None else [getattr(d, "graph_id", str(i)) for i, d in enumerate(items)]
    return GramMatrix(vals, spec.descriptor(), list(ids))


def cross_gram(rows: Sequence, cols: Sequence, spec: KernelSpec) -> np.ndarray:
    _, finish = spec.split()
    return np.array(finish(base_matrix(rows, spec, others=cols)), dtype=float)


def kernel_distance(k_fn: Callable, x1, x2) -> float:
    """Distance induced by a positive semi-definite kernel."""
    return float(np.sqrt(max(0.0, k_fn(x1, x1) + k_fn(x2, x2) - 2 * k_fn(x1, x2))))


def kernel_distance_matrix(gram_values: np.ndarray) -> np.ndarray:
    g = np.asarray(gram_values, dtype=float)
    d = np.diag(g)
    return np.sqrt(np.maximum(d[:, None] + d[None, :] - 2 * g, 0.0))


def write_gram_csv(g: GramMatrix, path: str) -> None:
    write_square_csv(g.values, g.item_ids, path, g.descriptor)


def read_gram_csv(path: str) -> GramMatrix:
    values, ids, descriptor = read_square_csv(path)
    return GramMatrix(values, descriptor, ids)
