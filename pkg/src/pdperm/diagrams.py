"""Diagram transforms and diagram distances.

* :func:`permute_diagram` builds the "fake" diagram: the 2n coordinates of a
  diagram are shuffled and re-paired at random, which keeps every critical
  value but destroys the pairing.
* :func:`pervec` / :func:`filvec` are pairing-free histogram baselines.
* :func:`bottleneck` and :func:`wasserstein_p` are exact diagram distances
  under the sup-norm ground metric.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sps
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import FormatError, ParameterError
from .persistence import ASCENDING, Kind, PersistenceDiagram
from .rng import make_rng

__all__ = [
    "permute_diagram",
    "HistogramRange",
    "fit_range",
    "pervec",
    "filvec",
    "filter_kinds",
    "bottleneck",
    "wasserstein_p",
    "distance_matrix",
    "write_square_csv",
    "read_square_csv",
    "BIN_GRID",
]

BIN_GRID = (100, 200, 300)


def permute_diagram(d: PersistenceDiagram, seed: int, orient: bool = True) -> PersistenceDiagram:
    """Random re-pairing of the coordinate multiset of ``d``.

    A single uniform shuffle of all 2n coordinates followed by consecutive
    pairing, i.e. a uniformly random perfect matching of the multiset. Point
    ``i`` of the output keeps the kind of point ``i`` of the input; with
    ``orient`` it is ordered birth <= death for ascending kinds and
    birth >= death for the others.
    """
    n = len(d)
    if n == 0:
        return d.with_points(d.births, d.deaths, fake=True)
    coords = np.concatenate([d.births, d.deaths])
    pairs = make_rng(seed, "permute").permutation(coords).reshape(n, 2)
    if orient:
        lo, hi = pairs.min(axis=1), pairs.max(axis=1)
        up = np.isin(d.kinds, [int(k) for k in ASCENDING])
        pairs = np.where(up[:, None], np.column_stack([lo, hi]), np.column_stack([hi, lo]))
    return d.with_points(pairs[:, 0], pairs[:, 1], fake=True)


def filter_kinds(d: PersistenceDiagram, kinds: Iterable) -> PersistenceDiagram:
    keep = np.isin(d.kinds, [int(Kind.parse(k)) for k in kinds])
    return d.with_points(d.births[keep], d.deaths[keep], d.kinds[keep])


# ---------------------------------------------------------------- histograms


@dataclass(frozen=True)
class HistogramRange:
    lo: float
    hi: float


def fit_range(value_sets: Iterable) -> HistogramRange:
    """Range spanned by a collection of value arrays (fit on training items only)."""
    lo, hi = np.inf, -np.inf
    for v in value_sets:
        v = np.asarray(v, dtype=float)
        if v.size:
            lo, hi = min(lo, v.min()), max(hi, v.max())
    if not np.isfinite(lo):
        lo = hi = 0.0
    return HistogramRange(float(lo), float(hi))


def _histogram(values, bins: int, rng: Optional[HistogramRange]) -> np.ndarray:
    if bins <= 0:
        raise ParameterError("bin count must be positive")
    v = np.asarray(values, dtype=float).ravel()
    out = np.zeros(bins)
    if v.size == 0:
        return out
    if rng is None:
        rng = fit_range([v])
    if rng.hi <= rng.lo:
        # degenerate range: everything lands in the first bin
        out[0] = 1.0
        return out
    v = np.clip(v, rng.lo, rng.hi)
    counts, _ = np.histogram(v, bins=bins, range=(rng.lo, rng.hi))
    return counts / v.size


def pervec(d: PersistenceDiagram, bins: int, range: Optional[HistogramRange] = None) -> np.ndarray:
    """Normalized histogram of all 2n coordinates of ``d``; out-of-range values clamp."""
    return _histogram(np.concatenate([d.births, d.deaths]), bins, range)


def filvec(f, bins: int, range: Optional[HistogramRange] = None) -> np.ndarray:
    """Normalized histogram of all vertex-function values."""
    return _histogram(f, bins, range)


# ---------------------------------------------------------------- distances


def _points(d) -> np.ndarray:
    if isinstance(d, PersistenceDiagram):
        return d.points
    return np.asarray(d, dtype=float).reshape(-1, 2)


def _augmented_cost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cost matrix of the matching problem with diagonal copies.

    Rows: points of ``a`` then one diagonal slot per point of ``b``;
    columns: points of ``b`` then one diagonal slot per point of ``a``.
    """
    n, m = len(a), len(b)
    c = np.full((n + m, n + m), np.inf)
    if n and m:
        c[:n, :m] = np.abs(a[:, None, :] - b[None, :, :]).max(axis=2)
    c[np.arange(n), m + np.arange(n)] = np.abs(a[:, 1] - a[:, 0]) / 2
    c[n + np.arange(m), np.arange(m)] = np.abs(b[:, 1] - b[:, 0]) / 2
    c[n:, m:] = 0.0
    return c


def bottleneck(d1, d2) -> float:
    """Exact bottleneck distance.

    Binary search over the candidate costs with a perfect-matching test on
    the threshold graph at each step.
    """
    a, b = _points(d1), _points(d2)
    if len(a) + len(b) == 0:
        return 0.0
    c = _augmented_cost(a, b)
    cand = np.unique(c[np.isfinite(c)])
    size = len(c)

    def feasible(t):
        g = sps.csr_matrix(c <= t)
        match = maximum_bipartite_matching(g, perm_type="column")
        return bool((match >= 0).all())

    lo, hi = 0, len(cand) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo]) if size else 0.0


def wasserstein_p(d1, d2, p: float = 1.0) -> float:
    """Exact p-th diagram distance via assignment on the augmented problem."""
    if p == np.inf:
        return bottleneck(d1, d2)
    if p < 1:
        raise ParameterError("p must be >= 1")
    a, b = _points(d1), _points(d2)
    if len(a) + len(b) == 0:
        return 0.0
    c = _augmented_cost(a, b) ** p
    finite = np.isfinite(c)
    c[~finite] = c[finite].sum() + 1.0
    r, s = linear_sum_assignment(c)
    return float(c[r, s].sum() ** (1.0 / p))


def distance_matrix(diagrams: Sequence, metric: str = "bottleneck", p: float = 1.0) -> np.ndarray:
    """Symmetric matrix of pairwise diagram distances."""
    fn = {"bottleneck": bottleneck, "wasserstein": lambda x, y: wasserstein_p(x, y, p)}.get(metric)
    if fn is None:
        raise ParameterError(f"unknown metric {metric!r}")
    n = len(diagrams)
    out = np.zeros((n, n))
    pts = [_points(d) for d in diagrams]
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = fn(pts[i], pts[j])
    return out


def write_square_csv(values: np.ndarray, ids: Sequence, path: str, descriptor: Optional[dict] = None) -> None:
    """Square matrix as CSV: a ``#`` descriptor line, a header row of ids, then one row per id.

    Values are written with 17 significant digits, so :func:`read_square_csv`
    returns them bit-exactly.
    """
    m = np.asarray(values, dtype=float)
    ids = [str(i) for i in ids]
    if m.shape != (len(ids), len(ids)):
        raise ParameterError("matrix shape does not match the id list")
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(descriptor or {}, sort_keys=True) + "\n")
        fh.write(",".join(["id"] + ids) + "\n")
        for i, row in zip(ids, m):
            fh.write(",".join([i] + [f"{x:.17g}" for x in row]) + "\n")


def read_square_csv(path: str):
    """Inverse of :func:`write_square_csv`: ``(values, ids, descriptor)``."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise FormatError(f"{path}: missing descriptor line")
    try:
        descriptor = json.loads(lines[0][1:])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: bad descriptor line") from exc
    header = lines[1].split(",") if len(lines) > 1 else []
    if not header or header[0] != "id":
        raise FormatError(f"{path}: missing id header row")
    ids = header[1:]
    rows = [ln.split(",") for ln in lines[2:]]
    if len(rows) != len(ids) or any(len(r) != len(ids) + 1 for r in rows):
        raise FormatError(f"{path}: matrix is not square")
    try:
        values = np.array([[float(x) for x in r[1:]] for r in rows]).reshape(len(ids), len(ids))
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric entry") from exc
    return values, ids, descriptor
