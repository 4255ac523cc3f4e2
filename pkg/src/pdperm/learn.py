"""Evaluation protocols: nested cross-validation, true/fake separation,
four-way confusion and mesh segmentation.

All protocols reduce to kernel SVMs on precomputed Gram matrices. A
*family* bundles one featurization with its hyperparameter grid and
produces train/test kernel matrices for given index sets; anything fitted
from data (histogram ranges, image grids, Fisher supports) is fitted on the
training indices only.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .diagrams import BIN_GRID, filter_kinds, filvec, fit_range, permute_diagram, pervec
from .errors import ParameterError
from .features import (IMAGE_BANDWIDTH_GRID, IMAGE_RESOLUTION_GRID, LANDSCAPE_BIN_GRID, LANDSCAPE_K_GRID,
                       fit_image_grid, landscape, persistence_image)
from .filtration import all_geodesics, compute_filtration
from .graphio import LabeledDataset, TriangleMesh, dumbbell_mesh
from .kernels import KERNEL_GRIDS, KernelSpec, base_matrix, fisher_embedding
from .persistence import PersistenceDiagram, extended_pd, sublevel_pd0, superlevel_pd0
from .rng import derive_seed, make_rng
from .svm import ensure_psd, svm_train

__all__ = [
    "C_GRID",
    "VECTOR_BANDWIDTH_GRID",
    "Pipeline",
    "ExperimentResult",
    "FourWayResult",
    "gaussian_kernel_on_vectors",
    "stratified_folds",
    "graph_diagrams",
    "make_family",
    "cross_validate",
    "cross_validate_items",
    "separation_experiment",
    "confusion_4way",
    "vertex_diagrams",
    "segmentation_run",
    "synthetic_shapes",
    "SYNTHETIC_SHAPE",
    "write_result_csv",
]

C_GRID = (0.01, 1.0, 10.0, 100.0, 1000.0)
VECTOR_BANDWIDTH_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
KERNEL_FEATS = ("sw", "pss", "pwg", "pf")
VECTOR_FEATS = ("pervec", "filvec", "landscape", "image")
DIAGRAM_MODES = ("extended", "sub0", "sup0")


def gaussian_kernel_on_vectors(x1, x2, bandwidth: float) -> float:
    """``exp(-|x1 - x2|^2 / (2 bandwidth^2))``."""
    a, b = np.asarray(x1, dtype=float).ravel(), np.asarray(x2, dtype=float).ravel()
    if a.shape != b.shape:
        raise ParameterError(f"vector lengths differ: {a.size} vs {b.size}")
    if bandwidth <= 0:
        raise ParameterError("bandwidth must be positive")
    return float(np.exp(-((a - b) ** 2).sum() / (2 * bandwidth ** 2)))


# ---------------------------------------------------------------- configuration


@dataclass(frozen=True)
class Pipeline:
    """What to compute for every item and how to evaluate it.

    ``grid`` overrides the default hyperparameter grid of the featurization,
    as a tuple of ``(name, values)`` pairs.
    """

    filtration: str = "degree"
    filtration_params: Tuple = ()
    diagram: str = "extended"
    transform: str = "true"
    kinds: Optional[Tuple[str, ...]] = None
    orient: bool = True
    featurization: str = "sw"
    grid: Tuple = ()
    C_grid: Tuple[float, ...] = C_GRID
    folds: int = 10
    repeats: int = 10
    inner_folds: int = 5

    def __post_init__(self):
        if self.diagram not in DIAGRAM_MODES:
            raise ParameterError(f"diagram must be one of {DIAGRAM_MODES}")
        if self.transform not in ("true", "fake"):
            raise ParameterError("transform must be 'true' or 'fake'")
        if self.featurization not in KERNEL_FEATS + VECTOR_FEATS:
            raise ParameterError(f"unknown featurization {self.featurization!r}")
        if self.folds < 2 or self.repeats < 1 or self.inner_folds < 2:
            raise ParameterError("need folds >= 2, inner_folds >= 2 and repeats >= 1")
        if not self.C_grid or min(self.C_grid) <= 0:
            raise ParameterError("C grid must hold positive values")

    def describe(self) -> dict:
        out = asdict(self)
        out["filtration_params"] = dict(self.filtration_params)
        out["grid"] = {k: list(v) for k, v in self.grid}
        out["kinds"] = list(self.kinds) if self.kinds else None
        out["C_grid"] = list(self.C_grid)
        return out


# ---------------------------------------------------------------- results


@dataclass
class ExperimentResult:
    """Per-fold accuracies and pooled confusion of one protocol run.

    ``confusion[i, j]`` counts test items of ``classes[i]`` predicted as
    ``classes[j]``, pooled over every fold of every repeat, so each row sums
    to ``repeats`` times the class size.
    """

    fold_accuracies: np.ndarray
    confusion: np.ndarray
    classes: np.ndarray
    config: dict
    seed: int
    selected: List[dict] = field(default_factory=list)
    repeats: int = 1

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_accuracies))

    @property
    def error_rate(self) -> float:
        return 1.0 - self.mean

    @property
    def f1(self) -> np.ndarray:
        c = self.confusion.astype(float)
        tp = np.diag(c)
        denom = c.sum(axis=0) + c.sum(axis=1)
        return np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)


@dataclass
class FourWayResult:
    """Confusion over ``[I+T, I+F, II+T, II+F]`` and its merge to the two source classes."""

    confusion4: np.ndarray
    confusion2: np.ndarray
    result: ExperimentResult

    @staticmethod
    def merge(c4: np.ndarray) -> np.ndarray:
        return np.asarray(c4).reshape(2, 2, 2, 2).sum(axis=(1, 3))


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_result_csv(result: ExperimentResult, path_or_buf, columns: Optional[dict] = None) -> None:
    """Fold rows plus ``mean``/``std`` summary rows; the config goes in ``#`` comment lines.

    ``columns`` adds fixed leading columns (dataset, filtration, ...).
    """
    cols = dict(columns or {})
    buf = io.StringIO()
    for line in json.dumps({"config": result.config, "seed": result.seed}, sort_keys=True, indent=1).splitlines():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(cols) + ["repeat", "fold", "accuracy", "selected"])
    n_folds = len(result.fold_accuracies) // max(result.repeats, 1)
    for k, acc in enumerate(result.fold_accuracies):
        sel = json.dumps(result.selected[k], sort_keys=True) if k < len(result.selected) else ""
        w.writerow(list(cols.values()) + [k // n_folds, k % n_folds, _fmt(acc), sel])
    w.writerow(list(cols.values()) + ["all", "mean", _fmt(result.mean), ""])
    w.writerow(list(cols.values()) + ["all", "std", _fmt(result.std), ""])
    text = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------- folds


def stratified_folds(labels, k: int, rng: np.random.Generator) -> np.ndarray:
    """Fold index per item; each class is shuffled and dealt round-robin.

    The dealing continues across classes, so fold sizes differ by at most one.
    """
    y = np.asarray(labels)
    folds = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        folds[idx] = (offset + np.arange(len(idx))) % k
        offset += len(idx)
    return folds


def _fold_count(labels, k: int) -> int:
    smallest = np.unique(labels, return_counts=True)[1].min()
    if smallest < k:
        warnings.warn(f"smallest class has {smallest} members; using {max(smallest, 2)} folds instead of {k}",
                      stacklevel=3)
        k = max(int(smallest), 2)
    return k


def _check_disjoint(train_idx, test_idx) -> None:
    if test_idx is not None and np.intersect1d(train_idx, test_idx).size:
        raise AssertionError("test items reached a fitting step")


# ---------------------------------------------------------------- families


class _Family:
    """A featurization and its grid: yields ``(params, K_train, K_test)``."""

    def settings(self) -> List[dict]:
        raise NotImplementedError

    def matrices(self, train_idx, test_idx, only: Optional[int] = None) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]:
        raise NotImplementedError


class _PairwiseFamily(_Family):
    """Kernels whose value depends on the two items only (sw, pss, pwg)."""

    def __init__(self, items, name: str, grid: Dict[str, Sequence]):
        self.items = list(items)
        self.name = name
        keys = sorted(grid)
        self._settings = [dict(zip(keys, vals)) for vals in product(*(grid[k] for k in keys))]
        self._full: Dict[int, np.ndarray] = {}

    def settings(self):
        return self._settings

    def _matrix(self, s: int) -> np.ndarray:
        if s not in self._full:
            spec = KernelSpec(self.name, **self._settings[s])
            _, finish = spec.split()
            self._full[s] = ensure_psd(finish(base_matrix(self.items, spec)))
        return self._full[s]

    def matrices(self, train_idx, test_idx, only=None):
        _check_disjoint(train_idx, test_idx)
        for s in range(len(self._settings)) if only is None else [only]:
            k = self._matrix(s)
            yield s, k[np.ix_(train_idx, train_idx)], k[np.ix_(test_idx, train_idx)]


class _FisherFamily(_Family):
    """Persistence Fisher kernel with the smoothing support fitted on training items."""

    def __init__(self, items, grid):
        self.items = list(items)
        self.ts = tuple(grid["t"])
        self.taus = tuple(grid["tau"])

    def settings(self):
        return [{"t": t, "tau": tau} for tau in self.taus for t in self.ts]

    def matrices(self, train_idx, test_idx, only=None):
        _check_disjoint(train_idx, test_idx)
        train = [self.items[i] for i in train_idx]
        test = [self.items[i] for i in test_idx]
        wanted = None if only is None else self.settings()[only]
        s = 0
        for tau in self.taus:
            if wanted is not None and wanted["tau"] != tau:
                s += len(self.ts)
                continue
            ptr = fisher_embedding(train, tau)
            pte = fisher_embedding(test, tau, reference=train)
            d_tr = 2 * np.arcsin(np.minimum(cdist(ptr, ptr) / 2, 1.0))
            d_te = 2 * np.arcsin(np.minimum(cdist(pte, ptr) / 2, 1.0)) if len(test) else np.zeros((0, len(train)))
            for t in self.ts:
                if wanted is None or wanted["t"] == t:
                    yield s, ensure_psd(np.exp(-t * d_tr)), np.exp(-t * d_te)
                s += 1


class _VectorFamily(_Family):
    """Fitted vectorization followed by a Gaussian kernel on the vectors."""

    def __init__(self, items, name: str, grid: Dict[str, Sequence]):
        self.items = list(items)
        self.name = name
        grid = dict(grid)
        self.bandwidths = tuple(grid.pop("bandwidth", VECTOR_BANDWIDTH_GRID))
        keys = sorted(grid)
        self.vec_settings = [dict(zip(keys, vals)) for vals in product(*(grid[k] for k in keys))]

    def settings(self):
        return [{**v, "bandwidth": b} for v in self.vec_settings for b in self.bandwidths]

    def _vectorize(self, train: list, test: list, p: dict):
        if self.name in ("pervec", "filvec"):
            vals = [np.concatenate([d.births, d.deaths]) for d in train] if self.name == "pervec" else train
            rng = fit_range(vals)
            fn = (lambda d: pervec(d, p["bins"], rng)) if self.name == "pervec" else (lambda f: filvec(f, p["bins"], rng))
        elif self.name == "landscape":
            rng = fit_range([d.oriented().ravel() for d in train])
            lo, hi = rng.lo, rng.hi if rng.hi > rng.lo else rng.lo + 1.0
            fn = lambda d: landscape(d, p["k"], p["bins"], (lo, hi))
        else:
            grid = fit_image_grid(train, p["resolution"], p.get("image_bandwidth", 1.0), p.get("weight", "death"))
            fn = lambda d: persistence_image(d, grid)
        return np.array([fn(x) for x in train]), np.array([fn(x) for x in test])

    def matrices(self, train_idx, test_idx, only=None):
        _check_disjoint(train_idx, test_idx)
        train = [self.items[i] for i in train_idx]
        test = [self.items[i] for i in test_idx]
        wanted = None if only is None else self.settings()[only]
        s = 0
        for v in self.vec_settings:
            if wanted is not None and any(wanted[k] != v[k] for k in v):
                s += len(self.bandwidths)
                continue
            xtr, xte = self._vectorize(train, test, v)
            d_tr = cdist(xtr, xtr, "sqeuclidean")
            d_te = cdist(xte, xtr, "sqeuclidean") if len(test) else np.zeros((0, len(train)))
            for b in self.bandwidths:
                if wanted is None or wanted["bandwidth"] == b:
                    yield s, np.exp(-d_tr / (2 * b * b)), np.exp(-d_te / (2 * b * b))
                s += 1


DEFAULT_VECTOR_GRIDS = {
    "pervec": {"bins": BIN_GRID},
    "filvec": {"bins": BIN_GRID},
    "landscape": {"k": LANDSCAPE_K_GRID, "bins": LANDSCAPE_BIN_GRID},
    "image": {"resolution": IMAGE_RESOLUTION_GRID, "image_bandwidth": IMAGE_BANDWIDTH_GRID},
}


def make_family(items: Sequence, featurization: str, grid: Optional[dict] = None) -> _Family:
    """Build the evaluation family for ``featurization`` over ``items``.

    ``items`` are diagrams, except for ``filvec`` where they are vertex
    function arrays. ``grid`` replaces entries of the default grid.
    """
    if featurization in KERNEL_FEATS:
        g = {**KERNEL_GRIDS[featurization], **(grid or {})}
        if featurization == "pf":
            return _FisherFamily(items, g)
        return _PairwiseFamily(items, featurization, g)
    if featurization in VECTOR_FEATS:
        return _VectorFamily(items, featurization, {**DEFAULT_VECTOR_GRIDS[featurization], **(grid or {})})
    raise ParameterError(f"unknown featurization {featurization!r}")


# ---------------------------------------------------------------- SVM plumbing


def _fit_predict(k_tr, y_tr, k_te, C):
    classes = np.unique(y_tr)
    if len(classes) == 1:
        return np.full(len(k_te), classes[0])
    return svm_train(k_tr, y_tr, C, check_psd=False).predict(k_te)


def _select(family: _Family, idx: np.ndarray, y: np.ndarray, C_grid, inner_folds: int, rng) -> Tuple[int, float]:
    """Grid point with the best mean inner-fold accuracy; ties keep the earlier grid point."""
    k = _fold_count(y[idx], inner_folds) if len(np.unique(y[idx])) > 1 else inner_folds
    inner = stratified_folds(y[idx], k, rng)
    n_set = len(family.settings())
    scores = np.zeros((n_set, len(C_grid)))
    for f in range(k):
        tr, te = idx[inner != f], idx[inner == f]
        for s, k_tr, k_te in family.matrices(tr, te):
            for c, C in enumerate(C_grid):
                scores[s, c] += np.mean(_fit_predict(k_tr, y[tr], k_te, C) == y[te])
    s, c = np.unravel_index(np.argmax(scores), scores.shape)
    return int(s), float(C_grid[c])


def cross_validate_items(items: Sequence, labels, featurization: str, seed: int, grid: Optional[dict] = None,
                         C_grid=C_GRID, folds: int = 10, repeats: int = 10, inner_folds: int = 5,
                         config: Optional[dict] = None, family: Optional[_Family] = None) -> ExperimentResult:
    """Repeated stratified k-fold with hyperparameters chosen by inner CV on each training part."""
    y = np.asarray(labels)
    if family is None:
        family = make_family(items, featurization, grid)
    classes = np.unique(y)
    folds = _fold_count(y, folds)
    accs, selected = [], []
    conf = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for r in range(repeats):
        assign = stratified_folds(y, folds, make_rng(seed, "outer", r))
        for f in range(folds):
            train, test = np.flatnonzero(assign != f), np.flatnonzero(assign == f)
            s, C = _select(family, train, y, C_grid, inner_folds, make_rng(seed, "inner", r, f))
            (_, k_tr, k_te), = family.matrices(train, test, only=s)
            pred = _fit_predict(k_tr, y[train], k_te, C)
            accs.append(float(np.mean(pred == y[test])))
            selected.append({**family.settings()[s], "C": C})
            np.add.at(conf, (np.searchsorted(classes, y[test]), np.searchsorted(classes, pred)), 1)
    cfg = dict(config or {"featurization": featurization, "grid": grid, "C_grid": list(C_grid)})
    cfg.update(folds=folds, repeats=repeats, inner_folds=inner_folds)
    return ExperimentResult(np.array(accs), conf, classes, cfg, seed, selected, repeats)


# ---------------------------------------------------------------- graph pipelines


def graph_diagrams(dataset: LabeledDataset, filtration: str, params: Optional[dict] = None,
                   diagram: str = "extended") -> Tuple[List[PersistenceDiagram], List[np.ndarray]]:
    """Vertex function and diagram of every graph of ``dataset``."""
    fn = {"extended": extended_pd, "sub0": sublevel_pd0, "sup0": superlevel_pd0}[diagram]
    funcs, dgms = [], []
    for i, g in enumerate(dataset.graphs):
        f = compute_filtration(filtration, g, **(params or {}))
        funcs.append(f)
        # canonical point order keeps permutations and summations independent of how a diagram was produced
        dgms.append(fn(g, f, dataset=dataset.name, graph_id=str(i), filtration=filtration).canonical())
    return dgms, funcs


def _fake(dgms, seed: int, orient: bool) -> List[PersistenceDiagram]:
    return [permute_diagram(d, derive_seed(seed, "fake", i), orient) for i, d in enumerate(dgms)]


def _transformed(dgms, pipeline: Pipeline, seed: int):
    if pipeline.kinds:
        dgms = [filter_kinds(d, pipeline.kinds) for d in dgms]
    if pipeline.transform == "fake":
        dgms = _fake(dgms, seed, pipeline.orient)
    return dgms


def cross_validate(dataset: LabeledDataset, pipeline: Pipeline, seed: int,
                   diagrams: Optional[Tuple[list, list]] = None) -> ExperimentResult:
    """Nested cross-validation of ``pipeline`` on a labelled graph dataset.

    ``diagrams`` may pass precomputed ``(diagrams, vertex_functions)`` as
    returned by :func:`graph_diagrams`.
    """
    dgms, funcs = diagrams or graph_diagrams(dataset, pipeline.filtration, dict(pipeline.filtration_params),
                                             pipeline.diagram)
    items = funcs if pipeline.featurization == "filvec" else _transformed(dgms, pipeline, seed)
    return cross_validate_items(items, dataset.labels, pipeline.featurization, seed, dict(pipeline.grid) or None,
                                pipeline.C_grid, pipeline.folds, pipeline.repeats, pipeline.inner_folds,
                                config={"dataset": dataset.name, **pipeline.describe()})


def _true_fake_items(dataset, pipeline, seed, diagrams):
    if pipeline.featurization == "filvec":
        raise ParameterError("filvec does not see diagrams; true and fake items would coincide")
    dgms, _ = diagrams or graph_diagrams(dataset, pipeline.filtration, dict(pipeline.filtration_params),
                                         pipeline.diagram)
    if pipeline.kinds:
        dgms = [filter_kinds(d, pipeline.kinds) for d in dgms]
    return dgms, _fake(dgms, seed, pipeline.orient)


def separation_experiment(dataset: LabeledDataset, pipeline: Pipeline, seed: int,
                          diagrams: Optional[Tuple[list, list]] = None) -> ExperimentResult:
    """Classify true diagrams (label 0) against one fake per graph (label 1)."""
    true, fake = _true_fake_items(dataset, pipeline, seed, diagrams)
    y = np.r_[np.zeros(len(true), dtype=np.int64), np.ones(len(fake), dtype=np.int64)]
    return cross_validate_items(true + fake, y, pipeline.featurization, seed, dict(pipeline.grid) or None,
                                pipeline.C_grid, pipeline.folds, pipeline.repeats, pipeline.inner_folds,
                                config={"dataset": dataset.name, "protocol": "separate", **pipeline.describe()})


def confusion_4way(dataset: LabeledDataset, pipeline: Pipeline, seed: int,
                   diagrams: Optional[Tuple[list, list]] = None) -> FourWayResult:
    """Four classes ``2 * label + is_fake`` on a binary dataset."""
    classes = np.unique(dataset.labels)
    if len(classes) != 2:
        raise ParameterError("four-way confusion needs a binary dataset")
    base = np.searchsorted(classes, dataset.labels)
    true, fake = _true_fake_items(dataset, pipeline, seed, diagrams)
    y = np.r_[2 * base, 2 * base + 1]
    res = cross_validate_items(true + fake, y, pipeline.featurization, seed, dict(pipeline.grid) or None,
                               pipeline.C_grid, pipeline.folds, pipeline.repeats, pipeline.inner_folds,
                               config={"dataset": dataset.name, "protocol": "confuse4", **pipeline.describe()})
    c4 = np.zeros((4, 4), dtype=np.int64)
    c4[np.ix_(res.classes, res.classes)] = res.confusion
    return FourWayResult(c4, FourWayResult.merge(c4), res)


# ---------------------------------------------------------------- segmentation


#: two-lobe shapes whose halves carry 2 and 3 ridges; see :func:`synthetic_shapes`
SYNTHETIC_SHAPE = dict(n_rings=16, n_theta=15, ridges=(2, 3), ridge_depth=0.5)


def synthetic_shapes(count: int, seed: int = 0) -> Tuple[List[TriangleMesh], List[np.ndarray]]:
    """``count`` ridged two-lobe meshes with per-vertex lobe labels.

    The ridges give each vertex's geodesic diagram several local maxima, so
    the birth-death pairing carries part of the lobe signal.
    """
    shapes = [dumbbell_mesh(derive_seed(seed, "shape", i), **SYNTHETIC_SHAPE) for i in range(count)]
    return [m for m, _ in shapes], [l for _, l in shapes]


def vertex_diagrams(mesh: TriangleMesh) -> List[PersistenceDiagram]:
    """Superlevel 0-diagram of the geodesic distance from each vertex."""
    g = mesh.skeleton()
    dist = all_geodesics(g, mesh.edge_lengths(g))
    return [superlevel_pd0(g, dist[v], graph_id=str(v), filtration="geodesic") for v in range(g.n_vertices)]


def segmentation_run(meshes: Sequence[TriangleMesh], labels: Sequence, seed: int, featurization: str = "image",
                     permute: bool = False, grid: Optional[dict] = None, C_grid=C_GRID, inner_folds: int = 3,
                     diagrams: Optional[List[List[PersistenceDiagram]]] = None) -> ExperimentResult:
    """Train on the vertices of half of the shapes, report accuracy on the rest.

    Hyperparameters are chosen by inner cross-validation over the training
    vertices. ``error_rate`` of the result is the misclassified fraction of
    test vertices.
    """
    if featurization not in ("image", "landscape"):
        raise ParameterError("segmentation uses 'image' or 'landscape' features")
    if len(meshes) < 2:
        raise ParameterError("need at least two shapes to split")
    per_shape = diagrams or [vertex_diagrams(m) for m in meshes]
    if permute:
        per_shape = [_fake(d, derive_seed(seed, "shape", i), True) for i, d in enumerate(per_shape)]
    order = make_rng(seed, "shape_split").permutation(len(meshes))
    train_shapes = np.sort(order[: len(meshes) // 2])
    owner = np.concatenate([np.full(len(d), i) for i, d in enumerate(per_shape)])
    items = [d for ds in per_shape for d in ds]
    y = np.concatenate([np.asarray(l) for l in labels])
    train = np.flatnonzero(np.isin(owner, train_shapes))
    test = np.flatnonzero(~np.isin(owner, train_shapes))
    family = make_family(items, featurization, grid)
    if len(np.unique(y[train])) > 1:
        s, C = _select(family, train, y, C_grid, inner_folds, make_rng(seed, "seg_inner"))
    else:
        s, C = 0, float(C_grid[0])
    (_, k_tr, k_te), = family.matrices(train, test, only=s)
    pred = _fit_predict(k_tr, y[train], k_te, C)
    classes = np.unique(y)
    conf = np.zeros((len(classes), len(classes)), dtype=np.int64)
    np.add.at(conf, (np.searchsorted(classes, y[test]), np.searchsorted(classes, pred)), 1)
    cfg = {"protocol": "segment", "featurization": featurization, "permute": permute, "grid": grid,
           "train_shapes": train_shapes.tolist()}
    return ExperimentResult(np.array([float(np.mean(pred == y[test]))]), conf, classes, cfg, seed,
                            [{**family.settings()[s], "C": C}], 1)
