"""C-SVM on precomputed Gram matrices.

The dual is solved by SMO with second-order working-set selection; the
inner loop is compiled with numba. Multiclass problems use one-vs-one
voting.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Tuple

import numba
import numpy as np

from .errors import NumericError, ParameterError, SolverError

__all__ = ["BinarySvm", "SvmModel", "svm_train", "ensure_psd", "KKT_TOL", "MAX_ITER", "PSD_CLIP_TOL"]

KKT_TOL = 1e-3
MAX_ITER = 10_000_000
PSD_CLIP_TOL = 1e-6
_TAU = 1e-12


def ensure_psd(values: np.ndarray, tol: float = PSD_CLIP_TOL) -> np.ndarray:
    """Return ``values`` with small negative eigenvalues clipped to zero.

    Raises :class:`NumericError` when the smallest eigenvalue is below
    ``-tol``, since then the matrix is not a Gram matrix up to round-off.
    """
    k = (np.asarray(values, dtype=float) + np.asarray(values, dtype=float).T) / 2
    w, v = np.linalg.eigh(k)
    if w[0] >= 0:
        return k
    if w[0] < -tol:
        raise NumericError(f"Gram matrix is not PSD: smallest eigenvalue {w[0]:.3e}")
    k = (v * np.maximum(w, 0.0)) @ v.T
    return (k + k.T) / 2


@numba.njit(cache=True)
def _smo(K, y, C, eps, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    it = 0
    gap = np.inf
    while it < max_iter:
        # i: maximal violating index in I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * grad[t]
                if v > gmax:
                    gmax = v
                    i = t
        # j: second-order choice in I_low
        gmin = np.inf
        best = np.inf
        j = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                v = -y[t] * grad[t]
                if v < gmin:
                    gmin = v
                if i >= 0:
                    b = gmax - v
                    if b > 0:
                        a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if a <= 0:
                            a = _TAU
                        obj = -(b * b) / a
                        if obj < best:
                            best = obj
                            j = t
        gap = gmax - gmin
        if i < 0 or j < 0 or gap < eps:
            return alpha, grad, it, gap, True
        it += 1
        yi = y[i]
        yj = y[j]
        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if a <= 0:
            a = _TAU
        ai_old = alpha[i]
        aj_old = alpha[j]
        if yi != yj:
            delta = (-grad[i] - grad[j]) / a
            diff = ai_old - aj_old
            ai = ai_old + delta
            aj = aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > 0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            delta = (grad[i] - grad[j]) / a
            s = ai_old + aj_old
            ai = ai_old - delta
            aj = aj_old + delta
            if s > C:
                if ai > C:
                    ai = C
                    aj = s - C
            else:
                if aj < 0:
                    aj = 0.0
                    ai = s
            if s > C:
                if aj > C:
                    aj = C
                    ai = s - C
            else:
                if ai < 0:
                    ai = 0.0
                    aj = s
        alpha[i] = ai
        alpha[j] = aj
        dai = ai - ai_old
        daj = aj - aj_old
        for t in range(n):
            grad[t] += y[t] * (yi * K[t, i] * dai + yj * K[t, j] * daj)
    return alpha, grad, it, gap, False


def _bias(alpha, grad, y, C):
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(-yg[free].mean())
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    ub = yg[up].min() if up.any() else np.inf
    lb = yg[low].max() if low.any() else -np.inf
    if not np.isfinite(ub):
        ub = lb
    if not np.isfinite(lb):
        lb = ub
    return float(-(ub + lb) / 2)


@dataclass
class BinarySvm:
    """Two-class solution: ``f(x) = sum_i coef_i k(x_i, x) + bias``.

    ``support`` indexes the training set; ``alpha`` are the dual variables
    (``0 <= alpha <= C``) and ``coef = alpha * y``.
    """

    support: np.ndarray
    alpha: np.ndarray
    coef: np.ndarray
    bias: float
    iterations: int = 0
    kkt_gap: float = 0.0

    def decision(self, k_rows: np.ndarray) -> np.ndarray:
        """Decision values for test rows of a (test x train) kernel matrix."""
        return np.asarray(k_rows)[:, self.support] @ self.coef + self.bias


def _train_binary(K, y, C, tol, max_iter) -> BinarySvm:
    alpha, grad, it, gap, ok = _smo(np.ascontiguousarray(K, dtype=float), y.astype(float), float(C), tol, max_iter)
    if not ok:
        raise SolverError(f"SMO did not converge in {max_iter} iterations (KKT residual {gap:.3e})")
    sv = np.flatnonzero(alpha > 0)
    return BinarySvm(sv, alpha[sv], alpha[sv] * y[sv], _bias(alpha, grad, y.astype(float), C), int(it), float(gap))


@dataclass
class SvmModel:
    """One-vs-one ensemble over ``classes``; a binary problem has one member.

    ``machines`` holds ``(a, b, BinarySvm)`` where positive decisions vote for
    ``classes[a]``; support indices refer to the full training set.
    """

    classes: np.ndarray
    machines: List[Tuple[int, int, BinarySvm]]
    C: float
    descriptor: dict = field(default_factory=dict)

    @property
    def support(self) -> np.ndarray:
        return np.unique(np.concatenate([m.support for _, _, m in self.machines]))

    def decision_function(self, k_rows: np.ndarray) -> np.ndarray:
        """Binary: one column of decision values; multiclass: one per pair."""
        k_rows = np.atleast_2d(np.asarray(k_rows, dtype=float))
        return np.column_stack([m.decision(k_rows) for _, _, m in self.machines])

    def predict(self, k_rows: np.ndarray) -> np.ndarray:
        dec = self.decision_function(k_rows)
        n_cls = len(self.classes)
        votes = np.zeros((len(dec), n_cls))
        score = np.zeros((len(dec), n_cls))
        for col, (a, b, _) in enumerate(self.machines):
            pos = dec[:, col] > 0
            votes[pos, a] += 1
            votes[~pos, b] += 1
            score[:, a] += dec[:, col]
            score[:, b] -= dec[:, col]
        # most votes; ties go to the larger aggregate decision value, then the lower class
        top = votes == votes.max(axis=1, keepdims=True)
        pick = np.argmax(np.where(top, score, -np.inf), axis=1)
        return self.classes[pick]


def svm_train(gram, labels, C: float, tol: float = KKT_TOL, max_iter: int = MAX_ITER,
              check_psd: bool = True, descriptor: Optional[dict] = None) -> SvmModel:
    """Fit a C-SVM on a precomputed Gram matrix.

    Parameters
    ----------
    gram : GramMatrix or ndarray
        Square kernel matrix over the training items.
    labels : array_like
        Class label per item; two or more distinct values.
    C : float
        Box constraint.
    check_psd : bool
        Clip tiny negative eigenvalues (fail on larger ones) before solving.
        Callers that already validated a larger matrix containing ``gram``
        as a principal submatrix can skip this.
    """
    values = getattr(gram, "values", gram)
    if descriptor is None:
        descriptor = dict(getattr(gram, "descriptor", {}) or {})
    K = np.asarray(values, dtype=float)
    y = np.asarray(labels)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != len(y):
        raise ParameterError("Gram matrix must be square and match the label count")
    if C <= 0:
        raise ParameterError("C must be positive")
    if check_psd:
        K = ensure_psd(K)
    classes = np.unique(y)
    if len(classes) < 2:
        raise ParameterError("need at least two classes")
    machines = []
    for a, b in combinations(range(len(classes)), 2):
        idx = np.flatnonzero((y == classes[a]) | (y == classes[b]))
        yy = np.where(y[idx] == classes[a], 1.0, -1.0)
        m = _train_binary(K[np.ix_(idx, idx)], yy, C, tol, max_iter)
        m.support = idx[m.support]
        machines.append((a, b, m))
    return SvmModel(classes, machines, float(C), descriptor)
