"""Scalar vertex functions on graphs and their lower/upper-star edge extensions.

Vertex functions are plain float arrays indexed by vertex.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sps
from scipy.optimize import linprog
from scipy.sparse.csgraph import dijkstra, laplacian, shortest_path
from scipy.sparse.linalg import eigsh

from .errors import NumericError, ParameterError, PdpermError
from .graphio import Graph

__all__ = [
    "EdgeFunction",
    "degree_function",
    "closeness",
    "fiedler_squared",
    "ollivier_ricci",
    "ricci_edge_curvatures",
    "geodesic_from",
    "extend_to_edges",
    "FILTRATIONS",
    "compute_filtration",
    "write_vertex_function",
    "read_vertex_function",
]

DENSE_EIGEN_LIMIT = 512


@dataclass(frozen=True)
class EdgeFunction:
    values: np.ndarray
    direction: str  # "sublevel" or "superlevel"


def degree_function(g: Graph) -> np.ndarray:
    return g.degrees().astype(float)


def closeness(g: Graph) -> np.ndarray:
    """Closeness centrality, scaled by component size for disconnected graphs.

    For ``v`` in a component with ``n_c`` vertices the value is
    ``(n_c - 1) / sum_u d(v, u) * (n_c - 1) / (n - 1)``; isolated vertices get 0.
    """
    n = g.n_vertices
    out = np.zeros(n)
    if n <= 1 or g.n_edges == 0:
        return out
    dist = shortest_path(g.adjacency(), method="D", unweighted=True, directed=False)
    reach = np.isfinite(dist)
    nc = reach.sum(axis=1)
    total = np.where(reach, dist, 0.0).sum(axis=1)
    ok = total > 0
    out[ok] = (nc[ok] - 1) / total[ok] * (nc[ok] - 1) / (n - 1)
    return out


def _smallest_eigenpairs(lap, k):
    n = lap.shape[0]
    if n <= DENSE_EIGEN_LIMIT:
        w, v = scipy.linalg.eigh(lap.toarray())
        return w[:k], v[:, :k]
    try:
        w, v = eigsh(lap.tocsc().astype(float), k=k, sigma=-1e-3, which="LM", tol=1e-10)
    except Exception as exc:  # ARPACK convergence failures surface as various types
        raise NumericError(f"Laplacian eigensolver failed: {exc}") from exc
    order = np.argsort(w)
    return w[order], v[:, order]


def fiedler_squared(g: Graph, tol: float = 1e-8) -> np.ndarray:
    """Entrywise square of the unit Fiedler vector of the graph Laplacian.

    When the second-smallest eigenvalue is repeated the Fiedler vector is not
    unique; the result is then the diagonal of the projector onto the
    eigenspace divided by its dimension, which equals the squared vector for
    a simple eigenvalue and does not depend on the solver's basis. For a
    disconnected graph the eigenspace is the null space minus the constant
    vector, giving ``(1/n_k - 1/n) / (C - 1)`` on a component of size ``n_k``.
    """
    n = g.n_vertices
    if n < 2:
        return np.ones(n)
    n_comp, comp = g.components()
    if n_comp > 1:
        size = np.bincount(comp)[comp]
        return (1.0 / size - 1.0 / n) / (n_comp - 1)
    lap = sps.csr_matrix(laplacian(g.adjacency()).astype(float))
    k = n if n <= DENSE_EIGEN_LIMIT else min(n, 16)
    w, v = _smallest_eigenpairs(lap, k)
    resid = np.linalg.norm(lap @ v - v * w, axis=0).max()
    if resid > 1e-6 * max(1.0, abs(w).max()):
        raise NumericError(f"eigenvector residual {resid:.3e} above tolerance")
    scale = max(1.0, abs(w).max())
    mult = np.flatnonzero(np.abs(w[1:] - w[1]) <= 1e3 * tol * scale) + 1
    if mult[-1] == k - 1 and k < n:
        raise NumericError("Fiedler eigenspace multiplicity exceeds the computed spectrum")
    sq = (v[:, mult] ** 2).sum(axis=1) / len(mult)
    return sq / sq.sum()


def ricci_edge_curvatures(g: Graph, alpha: float = 0.5) -> np.ndarray:
    """Ollivier-Ricci curvature of every edge, in ``g.edges`` order.

    The measure at ``x`` puts mass ``alpha`` on ``x`` and ``(1-alpha)/deg(x)``
    on each neighbour; Wasserstein-1 uses hop distance and is solved as a
    transportation LP.
    """
    if not 0 <= alpha < 1:
        raise ParameterError("alpha must lie in [0, 1)")
    adj = g.adjacency().tocsr()
    nbrs = np.split(adj.indices, adj.indptr[1:-1])
    dist = dijkstra(adj, directed=False, unweighted=True, limit=3.5)
    kappa = np.empty(g.n_edges)
    for idx, (x, y) in enumerate(g.edges):
        sx, mx = _walk_measure(x, nbrs[x], alpha)
        sy, my = _walk_measure(y, nbrs[y], alpha)
        w1 = transport_cost(mx, my, dist[np.ix_(sx, sy)])
        kappa[idx] = 1.0 - w1 / dist[x, y]
    return kappa


def _walk_measure(x, nbr, alpha):
    support = np.concatenate([[x], nbr])
    mass = np.concatenate([[alpha], np.full(len(nbr), (1.0 - alpha) / len(nbr))])
    return support, mass


def transport_cost(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> float:
    """Exact optimal transport cost between discrete measures of equal mass."""
    m, n = cost.shape
    rows = sps.kron(sps.eye(m), np.ones((1, n)))
    cols = sps.kron(np.ones((1, m)), sps.eye(n))
    res = linprog(cost.ravel(), A_eq=sps.vstack([rows, cols]).tocsr(), b_eq=np.r_[a, b],
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise PdpermError(f"transport LP failed: {res.message}")
    return float(res.fun)


def ollivier_ricci(g: Graph, alpha: float = 0.5, reduce: str = "mean") -> np.ndarray:
    """Vertex value = mean (or ``"min"``/``"max"``) curvature of incident edges; isolated vertices get 0."""
    if g.n_edges == 0:
        raise ParameterError("Ricci curvature needs at least one edge")
    kappa = ricci_edge_curvatures(g, alpha)
    e = g.edges
    out = np.zeros(g.n_vertices)
    deg = g.degrees()
    if reduce == "mean":
        np.add.at(out, e[:, 0], kappa)
        np.add.at(out, e[:, 1], kappa)
        nz = deg > 0
        out[nz] /= deg[nz]
    elif reduce in ("min", "max"):
        fill = np.inf if reduce == "min" else -np.inf
        out[:] = fill
        ufunc = np.minimum if reduce == "min" else np.maximum
        ufunc.at(out, e[:, 0], kappa)
        ufunc.at(out, e[:, 1], kappa)
        out[deg == 0] = 0.0
    else:
        raise ParameterError(f"unknown reduction {reduce!r}")
    return out


def geodesic_from(g: Graph, source: int, lengths=None, return_unreachable: bool = False):
    """Single-source shortest-path distances.

    ``lengths`` defaults to 1 per edge. Vertices outside the source's
    component get ``max reachable distance + 1``; pass
    ``return_unreachable=True`` to also receive their boolean mask.
    """
    if lengths is None:
        lengths = np.ones(g.n_edges)
    lengths = np.asarray(lengths, dtype=float)
    if (lengths < 0).any():
        raise ParameterError("edge lengths must be nonnegative")
    d = dijkstra(g.adjacency(lengths), directed=False, indices=int(source))
    unreachable = ~np.isfinite(d)
    if unreachable.any():
        d[unreachable] = d[~unreachable].max() + 1.0
    return (d, unreachable) if return_unreachable else d


def all_geodesics(g: Graph, lengths=None) -> np.ndarray:
    """Distance matrix; row ``x`` is :func:`geodesic_from` for source ``x``."""
    if lengths is None:
        lengths = np.ones(g.n_edges)
    d = dijkstra(g.adjacency(np.asarray(lengths, dtype=float)), directed=False)
    bad = ~np.isfinite(d)
    if bad.any():
        fill = np.where(bad, -np.inf, d).max(axis=1) + 1.0
        d = np.where(bad, fill[:, None], d)
    return d


def extend_to_edges(g: Graph, f, direction: str = "sublevel") -> EdgeFunction:
    f = np.asarray(f, dtype=float)
    a, b = f[g.edges[:, 0]], f[g.edges[:, 1]]
    if direction == "sublevel":
        vals = np.maximum(a, b)
    elif direction == "superlevel":
        vals = np.minimum(a, b)
    else:
        raise ParameterError(f"direction must be 'sublevel' or 'superlevel', not {direction!r}")
    return EdgeFunction(vals, direction)


FILTRATIONS = {
    "degree": degree_function,
    "closeness": closeness,
    "fiedler_s": fiedler_squared,
    "ricci": ollivier_ricci,
}


def compute_filtration(name: str, g: Graph, **params) -> np.ndarray:
    try:
        fn = FILTRATIONS[name]
    except KeyError:
        raise ParameterError(f"unknown filtration {name!r}; choose from {sorted(FILTRATIONS)}") from None
    if name == "ricci" and g.n_edges == 0:
        return np.zeros(g.n_vertices)
    return fn(g, **params)


def write_vertex_function(f, path: str) -> None:
    with open(path, "w") as fh:
        fh.writelines(f"{x:.17g}\n" for x in np.asarray(f, dtype=float))


def read_vertex_function(path: str) -> np.ndarray:
    with open(path) as fh:
        return np.array([float(ln) for ln in fh if ln.strip()])
