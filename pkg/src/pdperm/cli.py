"""Command-line experiment runner.

``pdperm run`` executes a whole pipeline (dataset -> vertex function ->
diagrams -> optional permutation -> featurization -> nested CV) and writes
CSV tables. The other subcommands expose the stages one at a time on the
staged file formats of the producing modules.

Settings come from an INI file (``--config``) and/or flags; flags win.
Diagrams and kernel base matrices are cached by content hash under
``$PDPERM_CACHE`` when that variable is set.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import os
import sys
import traceback
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import kernels
from .diagrams import BIN_GRID, distance_matrix, filter_kinds, permute_diagram, write_square_csv
from .errors import FormatError, ParameterError, PdpermError, SchemaError
from .features import fit_image_grid, landscape, persistence_image
from .filtration import FILTRATIONS
from .graphio import LabeledDataset, load_off, load_tudataset, make_sbm_dataset
from .kernels import KernelSpec, gram, write_gram_csv
from .learn import (C_GRID, KERNEL_FEATS, VECTOR_FEATS, FourWayResult, Pipeline, confusion_4way,
                    cross_validate, graph_diagrams, segmentation_run, separation_experiment, synthetic_shapes,
                    write_result_csv)
from .persistence import read_diagrams, write_diagrams
from .rng import derive_seed

__all__ = ["main", "ExperimentConfig", "load_config", "write_config", "CONFIG_SCHEMA"]

CONFIG_SCHEMA = 1
CACHE_ENV = "PDPERM_CACHE"


# ---------------------------------------------------------------- configuration


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _grid_value(text: str) -> tuple:
    out = []
    for x in str(text).split(","):
        x = x.strip()
        if not x:
            continue
        try:
            out.append(int(x))
        except ValueError:
            try:
                out.append(float(x))
            except ValueError:
                out.append(x)
    return tuple(out)


@dataclass
class ExperimentConfig:
    """Validated settings of one experiment; see ``pdperm run --help``."""

    dataset: str = "sbm"
    dataset_name: str = ""
    count: int = 1000
    noise: float = 0.0
    filtration: str = "degree"
    filtration_params: dict = field(default_factory=dict)
    diagram: str = "extended"
    transform: str = "true"
    kinds: Optional[tuple] = None
    orient: bool = True
    featurization: str = "sw"
    grid: dict = field(default_factory=dict)
    C_grid: tuple = C_GRID
    folds: int = 10
    repeats: int = 10
    inner_folds: int = 5
    seed: int = 0
    output: str = "pdperm-out"

    def validate(self) -> "ExperimentConfig":
        if self.filtration not in FILTRATIONS:
            raise ParameterError(f"unknown filtration {self.filtration!r}")
        if self.dataset != "sbm" and not os.path.isdir(self.dataset):
            raise ParameterError(f"dataset must be 'sbm' or a TUDataset directory, got {self.dataset!r}")
        if self.count < 2:
            raise ParameterError("count must be at least 2")
        self.pipeline()  # checks the remaining fields
        return self

    def pipeline(self) -> Pipeline:
        return Pipeline(
            filtration=self.filtration,
            filtration_params=tuple(sorted(self.filtration_params.items())),
            diagram=self.diagram,
            transform=self.transform,
            kinds=tuple(self.kinds) if self.kinds else None,
            orient=self.orient,
            featurization=self.featurization,
            grid=tuple(sorted((k, tuple(v)) for k, v in self.grid.items())),
            C_grid=tuple(self.C_grid),
            folds=self.folds,
            repeats=self.repeats,
            inner_folds=self.inner_folds,
        )


# section -> key -> (attribute, parser)
_SCHEMA = {
    "dataset": {"source": ("dataset", str), "name": ("dataset_name", str), "count": ("count", int),
                "noise": ("noise", float)},
    "filtration": {"name": ("filtration", str)},
    "diagrams": {"mode": ("diagram", str), "transform": ("transform", str),
                 "kinds": ("kinds", lambda s: tuple(k.strip() for k in s.split(",") if k.strip()) or None),
                 "orient": ("orient", lambda s: s.strip().lower() in ("1", "true", "yes", "on"))},
    "features": {"featurization": ("featurization", str)},
    "cv": {"folds": ("folds", int), "repeats": ("repeats", int), "inner_folds": ("inner_folds", int),
           "c_grid": ("C_grid", _floats)},
    "run": {"seed": ("seed", int), "output": ("output", str)},
}


def load_config(path: str, cfg: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read an INI config; unknown sections or keys are rejected.

    ``[filtration]`` keys other than ``name`` become filtration parameters,
    and ``[grid]`` keys become comma-separated hyperparameter grids.
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if not cp.read(path):
        raise FormatError(f"cannot read config {path}")
    cfg = cfg or ExperimentConfig()
    if not cp.has_section("pdperm") or cp.get("pdperm", "schema", fallback=None) is None:
        raise SchemaError(f"{path}: missing [pdperm] schema version")
    if cp.get("pdperm", "schema") != str(CONFIG_SCHEMA):
        raise SchemaError(f"{path}: config schema {cp.get('pdperm', 'schema')}, expected {CONFIG_SCHEMA}")
    for section in cp.sections():
        items = dict(cp.items(section))
        if section == "pdperm":
            if set(items) - {"schema"}:
                raise ParameterError(f"unknown keys in [pdperm]: {sorted(set(items) - {'schema'})}")
            continue
        if section == "grid":
            cfg.grid.update({k: _grid_value(v) for k, v in items.items()})
            continue
        if section not in _SCHEMA:
            raise ParameterError(f"unknown config section [{section}]")
        for key, value in items.items():
            if section == "filtration" and key != "name":
                cfg.filtration_params[key] = float(value)
                continue
            if key.lower() not in _SCHEMA[section]:
                raise ParameterError(f"unknown key {key!r} in [{section}]")
            attr, parse = _SCHEMA[section][key.lower()]
            try:
                setattr(cfg, attr, parse(value))
            except ValueError as exc:
                raise ParameterError(f"bad value for {section}.{key}: {value!r}") from exc
    return cfg


def write_config(cfg: ExperimentConfig, path: str) -> None:
    """Write the resolved config in the same INI layout :func:`load_config` reads."""
    def fmt(v):
        if isinstance(v, (tuple, list)):
            return ",".join(fmt(x) for x in v)
        if isinstance(v, bool):
            return "true" if v else "false"
        return repr(v) if isinstance(v, float) else str(v)

    lines = ["[pdperm]", f"schema = {CONFIG_SCHEMA}", ""]
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (attr, _) in keys.items():
            v = getattr(cfg, attr)
            # the output directory is where this file lives; leaving it out keeps runs comparable
            if v is None or v == "" or attr == "output":
                continue
            lines.append(f"{key} = {fmt(v)}")
        if section == "filtration":
            lines += [f"{k} = {fmt(v)}" for k, v in sorted(cfg.filtration_params.items())]
        lines.append("")
    if cfg.grid:
        lines.append("[grid]")
        lines += [f"{k} = {fmt(v)}" for k, v in sorted(cfg.grid.items())]
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


# ---------------------------------------------------------------- caching


def _cache_dir() -> Optional[str]:
    d = os.environ.get(CACHE_ENV)
    if d:
        os.makedirs(d, exist_ok=True)
    return d or None


def _digest(*parts) -> str:
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        h.update(p if isinstance(p, bytes) else json.dumps(p, sort_keys=True, default=str).encode())
        h.update(b"\0")
    return h.hexdigest()


def _dataset_digest(ds: LabeledDataset) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    for g in ds.graphs:
        h.update(np.int64(g.n_vertices).tobytes())
        h.update(g.edges.tobytes())
        h.update(b"|")
    return h.digest()


def cached_graph_diagrams(ds: LabeledDataset, filtration: str, params: dict, mode: str):
    """:func:`graph_diagrams` behind the on-disk cache (keyed by graphs + filtration)."""
    cache = _cache_dir()
    key = _digest(b"diagrams/1", _dataset_digest(ds), ds.name, filtration, params, mode)
    if cache:
        dpath = os.path.join(cache, f"dgm-{key}.txt")
        fpath = os.path.join(cache, f"fn-{key}.npz")
        if os.path.exists(dpath) and os.path.exists(fpath):
            with np.load(fpath) as z:
                funcs = np.split(z["values"], z["offsets"][1:-1])
            return read_diagrams(dpath), funcs
    dgms, funcs = graph_diagrams(ds, filtration, params, mode)
    if cache:
        offsets = np.cumsum([0] + [len(f) for f in funcs])
        tmp = os.path.join(cache, f".tmp-{key}")
        write_diagrams(dgms, tmp + ".txt")
        np.savez(tmp + ".npz", values=np.concatenate(funcs) if funcs else np.zeros(0), offsets=offsets)
        os.replace(tmp + ".txt", dpath)
        os.replace(tmp + ".npz", fpath)
    return dgms, funcs


class _DiskBaseCache:
    """Wraps the in-memory kernel base cache with ``.npy`` files."""

    def __init__(self, inner, directory: str):
        self.inner, self.directory = inner, directory

    def get(self, key, compute):
        def load_or_compute():
            path = os.path.join(self.directory, f"base-{_digest(b'base/1', repr(key[0]), key[1], key[2] or b'')}.npy")
            if os.path.exists(path):
                return np.load(path)
            val = np.asarray(compute())
            tmp = path + ".tmp.npy"
            np.save(tmp, val)
            os.replace(tmp, path)
            return val

        return self.inner.get(key, load_or_compute)

    def clear(self):
        self.inner.clear()


def _install_disk_cache() -> None:
    cache = _cache_dir()
    if cache and not isinstance(kernels.BASE_CACHE, _DiskBaseCache):
        kernels.BASE_CACHE = _DiskBaseCache(kernels.BASE_CACHE, cache)


# ---------------------------------------------------------------- data loading


def _load_dataset(cfg: ExperimentConfig) -> LabeledDataset:
    if cfg.dataset == "sbm":
        return make_sbm_dataset(cfg.count, cfg.noise, derive_seed(cfg.seed, "dataset"))
    name = cfg.dataset_name or os.path.basename(os.path.normpath(cfg.dataset))
    return load_tudataset(cfg.dataset, name)


def _read_labels(path: str) -> np.ndarray:
    with open(path) as fh:
        return np.array([int(ln) for ln in fh if ln.strip()], dtype=np.int64)


# ---------------------------------------------------------------- argument plumbing


def _add_data_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--config", help="INI config file")
    g.add_argument("--dataset", help="'sbm' or a TUDataset directory")
    g.add_argument("--dataset-name", help="TUDataset file prefix (default: directory name)")
    g.add_argument("--count", type=int, help="number of synthetic graphs")
    g.add_argument("--noise", type=float, help="fraction of flipped labels (sbm)")
    g.add_argument("--filtration", choices=sorted(FILTRATIONS))
    g.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="filtration parameter, e.g. alpha=0.5")
    g.add_argument("--diagram", choices=("extended", "sub0", "sup0"))
    g.add_argument("--kinds", help="comma-separated point kinds, e.g. ord0,ext1")
    g.add_argument("--no-orient", action="store_true", help="keep fake points unoriented")
    g.add_argument("--seed", type=int)


def _add_cv_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("evaluation")
    g.add_argument("--feat", choices=KERNEL_FEATS + VECTOR_FEATS, help="featurization")
    g.add_argument("--grid", action="append", default=[], metavar="NAME=V1,V2",
                   help="replace one hyperparameter grid")
    g.add_argument("--bins", type=int, choices=BIN_GRID, help="fix the histogram bin count")
    g.add_argument("--C-grid", dest="C_grid", help="comma-separated SVM C values")
    g.add_argument("--folds", type=int)
    g.add_argument("--repeats", type=int)
    g.add_argument("--inner-folds", type=int)
    g.add_argument("--out", help="output directory")


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    simple = {"dataset": "dataset", "dataset_name": "dataset_name", "count": "count", "noise": "noise",
              "filtration": "filtration", "diagram": "diagram", "seed": "seed", "feat": "featurization",
              "folds": "folds", "repeats": "repeats", "inner_folds": "inner_folds", "out": "output"}
    for flag, attr in simple.items():
        v = getattr(args, flag, None)
        if v is not None:
            setattr(cfg, attr, v)
    for kv in getattr(args, "param", []) or []:
        k, _, v = kv.partition("=")
        if not v:
            raise ParameterError(f"--param expects KEY=VALUE, got {kv!r}")
        cfg.filtration_params[k] = float(v)
    if getattr(args, "kinds", None):
        cfg.kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    if getattr(args, "no_orient", False):
        cfg.orient = False
    if getattr(args, "permute", False):
        cfg.transform = "fake"
    for kv in getattr(args, "grid", []) or []:
        k, _, v = kv.partition("=")
        if not v:
            raise ParameterError(f"--grid expects NAME=V1,V2, got {kv!r}")
        cfg.grid[k] = _grid_value(v)
    if getattr(args, "bins", None):
        cfg.grid["bins"] = (args.bins,)
    if getattr(args, "C_grid", None):
        cfg.C_grid = _floats(args.C_grid)
    return cfg.validate()


def _summary_row(cfg: ExperimentConfig, res, protocol: str) -> dict:
    return {"dataset": cfg.dataset if cfg.dataset != "sbm" else "sbm", "count": cfg.count,
            "noise": repr(float(cfg.noise)), "filtration": cfg.filtration, "diagram": cfg.diagram,
            "transform": cfg.transform, "featurization": cfg.featurization, "protocol": protocol,
            "mean": repr(res.mean), "std": repr(res.std), "n_folds": len(res.fold_accuracies)}


def _write_rows(rows: List[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _write_confusion(c: np.ndarray, labels: Sequence[str], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true\\pred"] + list(labels))
        for lab, row in zip(labels, c):
            w.writerow([lab] + [int(x) for x in row])


def _prepare_out(cfg: ExperimentConfig, args) -> str:
    os.makedirs(cfg.output, exist_ok=True)
    args.outdir = cfg.output
    marker = os.path.join(cfg.output, "FAILED")
    if os.path.exists(marker):
        os.remove(marker)
    write_config(cfg, os.path.join(cfg.output, "config.ini"))
    return cfg.output


# ---------------------------------------------------------------- subcommands


def cmd_run(args) -> None:
    cfg = _resolve(args)
    out = _prepare_out(cfg, args)
    _install_disk_cache()
    ds = _load_dataset(cfg)
    staged = cached_graph_diagrams(ds, cfg.filtration, cfg.filtration_params, cfg.diagram)
    res = cross_validate(ds, cfg.pipeline(), cfg.seed, diagrams=staged)
    _finish_classification(cfg, res, out, "classify")


def _finish_classification(cfg, res, out, protocol):
    cols = {"dataset": cfg.dataset, "filtration": cfg.filtration, "transform": cfg.transform,
            "featurization": cfg.featurization}
    write_result_csv(res, os.path.join(out, "folds.csv"), cols)
    _write_rows([_summary_row(cfg, res, protocol)], os.path.join(out, "summary.csv"))
    _write_confusion(res.confusion, [str(c) for c in res.classes], os.path.join(out, "confusion.csv"))


def cmd_diagrams(args) -> None:
    cfg = _resolve(args)
    ds = _load_dataset(cfg)
    dgms, funcs = cached_graph_diagrams(ds, cfg.filtration, cfg.filtration_params, cfg.diagram)
    if cfg.kinds:
        dgms = [filter_kinds(d, cfg.kinds) for d in dgms]
    write_diagrams(dgms, args.output)
    if args.labels:
        with open(args.labels, "w") as fh:
            fh.writelines(f"{int(y)}\n" for y in ds.labels)
    if args.functions:
        np.savez(args.functions, values=np.concatenate(funcs), offsets=np.cumsum([0] + [len(f) for f in funcs]))


def cmd_permute(args) -> None:
    dgms = read_diagrams(args.input)
    out = [permute_diagram(d, derive_seed(args.seed, "fake", i), not args.no_orient) for i, d in enumerate(dgms)]
    write_diagrams(out, args.output)


def cmd_featurize(args) -> None:
    dgms = read_diagrams(args.input)
    if args.feat == "landscape":
        pts = np.concatenate([d.oriented().ravel() for d in dgms]) if dgms else np.zeros(1)
        rng = (float(pts.min()), float(pts.max()) if pts.max() > pts.min() else float(pts.min()) + 1.0)
        rows = [landscape(d, args.k, args.bins, rng) for d in dgms]
        desc = {"method": "landscape", "k": args.k, "bins": args.bins, "range": list(rng)}
    elif args.feat == "image":
        grid = fit_image_grid(dgms, args.resolution, args.bandwidth, args.weight)
        rows = [persistence_image(d, grid) for d in dgms]
        desc = grid.descriptor()
    else:
        from .diagrams import fit_range, pervec

        rng = fit_range([np.concatenate([d.births, d.deaths]) for d in dgms])
        rows = [pervec(d, args.bins, rng) for d in dgms]
        desc = {"method": "pervec", "bins": args.bins, "range": [rng.lo, rng.hi]}
    with open(args.output, "w") as fh:
        fh.write("# " + json.dumps(desc, sort_keys=True) + "\n")
        for d, r in zip(dgms, rows):
            fh.write(",".join([d.graph_id] + [f"{x:.17g}" for x in r]) + "\n")


def _kernel_spec(args) -> KernelSpec:
    params = {}
    main_param = {"sw": "sigma", "pss": "t", "pwg": "tau", "pf": "t"}[args.kernel]
    if args.bandwidth is not None:
        params[main_param] = args.bandwidth
    for kv in args.kparam:
        k, _, v = kv.partition("=")
        params[k] = float(v)
    defaults = {"sw": {}, "pss": {}, "pwg": {"rho": 1.0, "K_w": 1.0}, "pf": {"tau": 1.0}}[args.kernel]
    spec = KernelSpec(args.kernel, **{**defaults, **params})
    missing = {"sw": ["sigma"], "pss": ["t"], "pwg": ["tau", "rho", "K_w"], "pf": ["t", "tau"]}[args.kernel]
    if any(m not in spec.kwargs for m in missing):
        raise ParameterError(f"kernel {args.kernel} needs {missing}")
    return spec


def cmd_gram(args) -> None:
    dgms = read_diagrams(args.input)
    ids = [d.graph_id for d in dgms]
    if args.kernel in ("bottleneck", "wasserstein"):
        m = distance_matrix(dgms, args.kernel, args.p)
        write_square_csv(m, ids, args.output, {"metric": args.kernel, "p": args.p})
        return
    write_gram_csv(gram(dgms, _kernel_spec(args), ids), args.output)


def cmd_classify(args) -> None:
    """Nested CV on staged diagrams plus labels; matches ``run`` on the same settings."""
    cfg = _resolve(args)
    out = _prepare_out(cfg, args)
    dgms = read_diagrams(args.diagrams)
    labels = _read_labels(args.labels)
    funcs = [np.zeros(0)] * len(dgms)
    if args.functions:
        with np.load(args.functions) as z:
            funcs = np.split(z["values"], z["offsets"][1:-1])
    ds = LabeledDataset([None] * len(dgms), labels, name=dgms[0].dataset if dgms else "staged")
    res = cross_validate(ds, cfg.pipeline(), cfg.seed, diagrams=(dgms, funcs))
    _finish_classification(cfg, res, out, "classify")


def cmd_separate(args) -> None:
    cfg = _resolve(args)
    out = _prepare_out(cfg, args)
    _install_disk_cache()
    ds = _load_dataset(cfg)
    staged = cached_graph_diagrams(ds, cfg.filtration, cfg.filtration_params, cfg.diagram)
    res = separation_experiment(ds, cfg.pipeline(), cfg.seed, diagrams=staged)
    cfg.transform = "true+fake"
    _finish_classification(cfg, res, out, "separate")


def cmd_confuse4(args) -> None:
    cfg = _resolve(args)
    out = _prepare_out(cfg, args)
    _install_disk_cache()
    ds = _load_dataset(cfg)
    staged = cached_graph_diagrams(ds, cfg.filtration, cfg.filtration_params, cfg.diagram)
    four: FourWayResult = confusion_4way(ds, cfg.pipeline(), cfg.seed, diagrams=staged)
    cfg.transform = "true+fake"
    _finish_classification(cfg, four.result, out, "confuse4")
    _write_confusion(four.confusion4, ["I+T", "I+F", "II+T", "II+F"], os.path.join(out, "confusion4.csv"))
    _write_confusion(four.confusion2, ["I", "II"], os.path.join(out, "confusion2.csv"))


def cmd_segment(args) -> None:
    if args.synthetic:
        meshes, labels = synthetic_shapes(args.synthetic, args.seed)
    else:
        if not args.meshes or len(args.meshes) != len(args.labels or []):
            raise ParameterError("give one --labels sidecar per mesh")
        meshes = [load_off(p) for p in args.meshes]
        labels = [_read_labels(p) for p in args.labels]
        for m, l, p in zip(meshes, labels, args.labels):
            if len(l) != len(m.vertices):
                raise FormatError(f"{p}: {len(l)} labels for {len(m.vertices)} vertices")
    os.makedirs(args.out, exist_ok=True)
    args.outdir = args.out
    rows = []
    for permute in (False, True) if args.both else (args.permute,):
        res = segmentation_run(meshes, labels, args.seed, args.feat, permute)
        tag = "fake" if permute else "true"
        write_result_csv(res, os.path.join(args.out, f"segment-{args.feat}-{tag}.csv"))
        rows.append({"featurization": args.feat, "transform": tag, "error": repr(res.error_rate)})
    _write_rows(rows, os.path.join(args.out, "summary.csv"))


def cmd_report(args) -> None:
    """Pivot summary rows of several runs into an accuracy table (one column per transform)."""
    rows = []
    for d in args.runs:
        path = d if d.endswith(".csv") else os.path.join(d, "summary.csv")
        with open(path, newline="") as fh:
            rows += list(csv.DictReader(fh))
    if not rows:
        raise FormatError("no summary rows found")
    keys = ("dataset", "filtration", "featurization", "noise")
    transforms = sorted({r["transform"] for r in rows})
    table = {}
    for r in rows:
        table.setdefault(tuple(r[k] for k in keys), {})[r["transform"]] = r["mean"]
    out_rows = []
    for key in sorted(table, key=lambda k: (k[0], k[1], k[2], float(k[3]))):
        row = dict(zip(keys, key))
        row.update({f"acc_{t}": table[key].get(t, "") for t in transforms})
        out_rows.append(row)
    if args.output:
        _write_rows(out_rows, args.output)
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=list(out_rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(out_rows)


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdperm", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline with nested cross-validation")
    _add_data_args(p)
    _add_cv_args(p)
    p.add_argument("--permute", action="store_true", help="classify fake (re-paired) diagrams")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("diagrams", help="compute diagrams of a dataset")
    _add_data_args(p)
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--labels", help="also write graph labels, one per line")
    p.add_argument("--functions", help="also write vertex functions (.npz)")
    p.set_defaults(func=cmd_diagrams)

    p = sub.add_parser("permute", help="replace every diagram by a fake one")
    p.add_argument("input")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-orient", action="store_true")
    p.set_defaults(func=cmd_permute)

    p = sub.add_parser("featurize", help="vectorize staged diagrams")
    p.add_argument("input")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--feat", choices=("pervec", "landscape", "image"), default="pervec")
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--resolution", type=int, default=20)
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--weight", choices=("death", "persistence", "uniform"), default="death")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("gram", help="Gram or distance matrix of staged diagrams")
    p.add_argument("input")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--kernel", choices=("sw", "pss", "pwg", "pf", "bottleneck", "wasserstein"), default="sw")
    p.add_argument("--bandwidth", type=float, help="sigma (sw), t (pss, pf) or tau (pwg)")
    p.add_argument("--kparam", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--p", type=float, default=1.0, help="order of the Wasserstein distance")
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("classify", help="nested CV on staged diagrams")
    p.add_argument("--diagrams", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--functions", help="vertex functions (.npz), needed for filvec")
    _add_data_args(p)
    _add_cv_args(p)
    p.add_argument("--permute", action="store_true")
    p.set_defaults(func=cmd_classify)

    for name, func, text in (("separate", cmd_separate, "true-vs-fake separation"),
                             ("confuse4", cmd_confuse4, "four-way true/fake confusion")):
        p = sub.add_parser(name, help=text)
        _add_data_args(p)
        _add_cv_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("segment", help="per-vertex mesh segmentation")
    p.add_argument("--meshes", nargs="*", help="OFF files")
    p.add_argument("--labels", nargs="*", help="per-vertex label files, one per mesh")
    p.add_argument("--synthetic", type=int, default=0, help="use N generated two-lobe shapes instead")
    p.add_argument("--feat", choices=("image", "landscape"), default="image")
    p.add_argument("--permute", action="store_true")
    p.add_argument("--both", action="store_true", help="run with and without permutation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="pdperm-out")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("report", help="accuracy table from run summaries")
    p.add_argument("runs", nargs="+", help="run output directories or summary.csv files")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (PdpermError, OSError) as exc:
        out = getattr(args, "outdir", None)
        if out and os.path.isdir(out):
            with open(os.path.join(out, "FAILED"), "w") as fh:
                fh.write(f"{type(exc).__name__}: {exc}\n")
                fh.write(traceback.format_exc())
        print(f"pdperm: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
