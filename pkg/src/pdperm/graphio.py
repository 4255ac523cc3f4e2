"""Graphs, meshes and point clouds: data model, readers/writers, generators."""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sps
from scipy.sparse.csgraph import connected_components

from .errors import FormatError, IngestionError, ParameterError, SamplingError, UnsupportedFormatError
from .rng import derive_seed, make_rng

__all__ = [
    "Graph",
    "LabeledDataset",
    "TriangleMesh",
    "PointCloud",
    "load_tudataset",
    "save_tudataset",
    "read_graph",
    "write_graph",
    "load_off",
    "write_off",
    "sample_mesh",
    "knn_graph",
    "sbm",
    "make_sbm_dataset",
    "dumbbell_mesh",
]


def _canonical_edges(edges) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(e) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on vertices ``0..n_vertices-1``.

    ``edges`` is stored as an ``(m, 2)`` integer array with ``i < j`` in every
    row and rows in lexicographic order. Duplicate edges are collapsed;
    self-loops are rejected.
    """

    n_vertices: int
    edges: np.ndarray
    vertex_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        e = _canonical_edges(self.edges)
        n = int(self.n_vertices)
        if n < 0:
            raise ParameterError("n_vertices must be nonnegative")
        if len(e):
            if (e[:, 0] == e[:, 1]).any():
                raise ParameterError("self-loops are not allowed")
            if e.min() < 0 or e.max() >= n:
                raise ParameterError("edge endpoint out of range")
        e.setflags(write=False)
        object.__setattr__(self, "n_vertices", n)
        object.__setattr__(self, "edges", e)
        if self.vertex_labels is not None:
            lab = np.asarray(self.vertex_labels, dtype=np.int64)
            if lab.shape != (n,):
                raise ParameterError("vertex_labels must have one entry per vertex")
            lab.setflags(write=False)
            object.__setattr__(self, "vertex_labels", lab)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self, weights=None) -> sps.csr_matrix:
        n, e = self.n_vertices, self.edges
        w = np.ones(len(e)) if weights is None else np.asarray(weights, dtype=float)
        a = sps.coo_matrix((np.r_[w, w], (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(n, n))
        return a.tocsr()

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)

    def components(self) -> tuple[int, np.ndarray]:
        """Number of connected components and per-vertex component index."""
        if self.n_vertices == 0:
            return 0, np.zeros(0, dtype=np.int64)
        return connected_components(self.adjacency(), directed=False)

    def betti1(self) -> int:
        return self.n_edges - self.n_vertices + self.components()[0]

    def relabel(self, perm) -> "Graph":
        """Graph with vertex ``v`` renamed ``perm[v]``."""
        perm = np.asarray(perm)
        labels = None
        if self.vertex_labels is not None:
            labels = np.empty_like(self.vertex_labels)
            labels[perm] = self.vertex_labels
        return Graph(self.n_vertices, perm[self.edges], labels)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n_vertices == other.n_vertices and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n_vertices, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n_vertices={self.n_vertices}, n_edges={self.n_edges})"


@dataclass
class LabeledDataset:
    graphs: list
    labels: np.ndarray
    name: str = "dataset"
    class_names: Optional[list] = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.graphs) != len(self.labels):
            raise ParameterError("graphs and labels differ in length")

    def __len__(self):
        return len(self.graphs)

    @property
    def n_classes(self) -> int:
        return len(np.unique(self.labels))


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise FormatError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    def skeleton(self) -> Graph:
        """The 1-skeleton: mesh vertices plus all face edges."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [0, 2]]])
        e = e[e[:, 0] != e[:, 1]]
        return Graph(len(self.vertices), e)

    def edge_lengths(self, graph: Optional[Graph] = None) -> np.ndarray:
        g = self.skeleton() if graph is None else graph
        d = self.vertices[g.edges[:, 0]] - self.vertices[g.edges[:, 1]]
        return np.linalg.norm(d, axis=1)

    def face_areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.faces[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float).reshape(-1, 3))

    def __len__(self):
        return len(self.points)


# ---------------------------------------------------------------- TUDataset


def _read_lines(path: str) -> list[str]:
    if not os.path.exists(path):
        raise IngestionError(f"missing file: {path}")
    with open(path, newline=None) as fh:
        return [ln.strip() for ln in fh if ln.strip()]


def _parse_ints(lines, path, width=None) -> np.ndarray:
    try:
        rows = [[int(tok) for tok in ln.replace(",", " ").split()] for ln in lines]
    except ValueError as exc:
        raise FormatError(f"{path}: non-integer entry ({exc})") from None
    if width is not None and any(len(r) != width for r in rows):
        raise FormatError(f"{path}: expected {width} values per line")
    return np.asarray(rows, dtype=np.int64).reshape(len(rows), -1)


def load_tudataset(directory: str, name: str) -> LabeledDataset:
    """Read a dataset in the TUDataset text layout.

    Expects ``NAME_A.txt`` (1-indexed ``i, j`` edge pairs),
    ``NAME_graph_indicator.txt`` (graph id per node) and
    ``NAME_graph_labels.txt`` (class per graph). Directed duplicates collapse
    to one undirected edge and class labels are remapped to ``0..k-1``.
    """
    prefix = os.path.join(directory, name)
    a_path = f"{prefix}_A.txt"
    ind_path = f"{prefix}_graph_indicator.txt"
    lab_path = f"{prefix}_graph_labels.txt"
    edges = _parse_ints(_read_lines(a_path), a_path, 2)
    indicator = _parse_ints(_read_lines(ind_path), ind_path, 1).ravel()
    raw_labels = _parse_ints(_read_lines(lab_path), lab_path, 1).ravel()

    n_graphs = len(raw_labels)
    if len(indicator) and (indicator.min() < 1 or indicator.max() > n_graphs):
        raise FormatError(f"{ind_path}: graph id outside 1..{n_graphs}")
    if np.any(np.diff(indicator) < 0):
        raise FormatError(f"{ind_path}: nodes are not grouped by graph")
    n_nodes = len(indicator)
    if len(edges) and (edges.min() < 1 or edges.max() > n_nodes):
        raise FormatError(f"{a_path}: node id outside 1..{n_nodes}")

    gid = indicator - 1
    counts = np.bincount(gid, minlength=n_graphs)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    edges = edges - 1
    edges = edges[edges[:, 0] != edges[:, 1]]
    eg = gid[edges[:, 0]]
    if np.any(eg != gid[edges[:, 1]]):
        raise FormatError(f"{a_path}: edge joins nodes of different graphs")
    order = np.argsort(eg, kind="stable")
    edges, eg = edges[order], eg[order]
    bounds = np.searchsorted(eg, np.arange(n_graphs + 1))

    graphs = []
    for k in range(n_graphs):
        e = edges[bounds[k]:bounds[k + 1]] - offsets[k]
        graphs.append(Graph(int(counts[k]), e))

    classes, labels = np.unique(raw_labels, return_inverse=True)
    return LabeledDataset(graphs, labels, name=name, class_names=[int(c) for c in classes])


def save_tudataset(ds: LabeledDataset, directory: str, name: Optional[str] = None) -> None:
    """Write ``ds`` in the TUDataset layout (both edge directions, as the corpora do)."""
    name = name or ds.name
    os.makedirs(directory, exist_ok=True)
    prefix = os.path.join(directory, name)
    labels = ds.labels if ds.class_names is None else np.asarray(ds.class_names)[ds.labels]
    offset = 0
    with open(f"{prefix}_A.txt", "w") as fa, open(f"{prefix}_graph_indicator.txt", "w") as fi:
        for k, g in enumerate(ds.graphs):
            for i, j in g.edges + offset + 1:
                fa.write(f"{i}, {j}\n{j}, {i}\n")
            fi.write(f"{k + 1}\n" * g.n_vertices)
            offset += g.n_vertices
    with open(f"{prefix}_graph_labels.txt", "w") as fl:
        fl.writelines(f"{int(y)}\n" for y in labels)


def write_graph(g: Graph, path: str) -> None:
    """Write the internal ``v <n>`` / ``e <i> <j>`` serialization."""
    with open(path, "w") as fh:
        fh.write(f"v {g.n_vertices}\n")
        fh.writelines(f"e {i} {j}\n" for i, j in g.edges)


def read_graph(path: str) -> Graph:
    n, edges = None, []
    for ln in _read_lines(path):
        tag, *rest = ln.split()
        if tag == "v" and len(rest) == 1:
            n = int(rest[0])
        elif tag == "e" and len(rest) == 2:
            edges.append((int(rest[0]), int(rest[1])))
        else:
            raise FormatError(f"{path}: unrecognized line {ln!r}")
    if n is None:
        raise FormatError(f"{path}: missing vertex-count line")
    return Graph(n, edges)


# ---------------------------------------------------------------- meshes


def load_off(path: str) -> TriangleMesh:
    """Read an ASCII OFF file containing triangles only."""
    lines = [ln.split("#", 1)[0].strip() for ln in _read_lines(path)]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("OFF"):
        raise FormatError(f"{path}: missing OFF header")
    head = lines[0][3:].split()
    rest = lines[1:]
    if not head:
        if not rest:
            raise FormatError(f"{path}: missing counts line")
        head, rest = rest[0].split(), rest[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise FormatError(f"{path}: malformed counts line") from None
    if nv < 0 or nf < 0 or len(rest) < nv + nf:
        raise FormatError(f"{path}: declared {nv} vertices and {nf} faces, file too short")
    try:
        verts = np.array([[float(t) for t in ln.split()[:3]] for ln in rest[:nv]])
    except ValueError:
        raise FormatError(f"{path}: malformed vertex line") from None
    if verts.shape != (nv, 3) and nv:
        raise FormatError(f"{path}: vertex lines need 3 coordinates")
    faces = []
    for ln in rest[nv:nv + nf]:
        tok = ln.split()
        k = int(tok[0])
        if k != 3:
            raise UnsupportedFormatError(f"{path}: {k}-sided face; only triangles are supported")
        faces.append([int(t) for t in tok[1:4]])
    return TriangleMesh(verts.reshape(nv, 3), np.asarray(faces, dtype=np.int64).reshape(nf, 3))


def write_off(mesh: TriangleMesh, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"OFF\n{len(mesh.vertices)} {len(mesh.faces)} 0\n")
        fh.writelines(f"{x:.17g} {y:.17g} {z:.17g}\n" for x, y, z in mesh.vertices)
        fh.writelines(f"3 {a} {b} {c}\n" for a, b, c in mesh.faces)


def sample_mesh(mesh: TriangleMesh, n: int, seed: int, normalize: bool = True) -> PointCloud:
    """Sample ``n`` points uniformly on the surface of ``mesh``.

    Faces are drawn with probability proportional to area and points are
    placed with uniform barycentric coordinates. With ``normalize`` the cloud
    is centred at its centroid and scaled to unit maximum norm.
    """
    areas = mesh.face_areas()
    total = areas.sum()
    if not np.isfinite(total) or total <= 0:
        raise SamplingError("mesh has no face with positive area")
    rng = make_rng(seed, "sample_mesh")
    face = rng.choice(len(areas), size=n, p=areas / total)
    r1, r2 = rng.random(n), rng.random(n)
    s = np.sqrt(r1)
    a, b, c = (mesh.vertices[mesh.faces[face, i]] for i in range(3))
    pts = (1 - s)[:, None] * a + (s * (1 - r2))[:, None] * b + (s * r2)[:, None] * c
    if normalize:
        pts = pts - pts.mean(axis=0)
        scale = np.linalg.norm(pts, axis=1).max()
        if scale > 0:
            pts = pts / scale
    return PointCloud(pts)


def knn_graph(cloud: PointCloud, k: int, block: int = 1024) -> Graph:
    """Symmetrized (union) k-nearest-neighbour graph; distance ties go to the lower index."""
    pts = cloud.points
    n = len(pts)
    if k <= 0:
        raise ParameterError("k must be positive")
    if n <= k:
        raise ParameterError(f"need more than k={k} points, got {n}")
    rows = []
    for lo in range(0, n, block):
        chunk = pts[lo:lo + block]
        d2 = ((chunk[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        d2[np.arange(len(chunk)), np.arange(lo, lo + len(chunk))] = np.inf
        nbr = np.argsort(d2, axis=1, kind="stable")[:, :k]
        src = np.repeat(np.arange(lo, lo + len(chunk)), k)
        rows.append(np.column_stack([src, nbr.ravel()]))
    return Graph(n, np.concatenate(rows))


# ---------------------------------------------------------------- SBM


def sbm(n1: int, n2: int, p: float, q: float, seed: int) -> Graph:
    """Two-block stochastic block model; block 1 holds vertices ``0..n1-1``."""
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise ParameterError("edge probabilities must lie in [0, 1]")
    n = n1 + n2
    iu, ju = np.triu_indices(n, k=1)
    same = (iu < n1) == (ju < n1)
    prob = np.where(same, p, q)
    keep = make_rng(seed, "sbm").random(len(iu)) < prob
    return Graph(n, np.column_stack([iu[keep], ju[keep]]), vertex_labels=(np.arange(n) >= n1).astype(np.int64))


SBM_MODELS = ((100, 50, 0.5, 0.1), (75, 75, 0.4, 0.2))


def make_sbm_dataset(count: int = 1000, noise: float = 0.0, seed: int = 0,
                     models: Sequence = SBM_MODELS) -> LabeledDataset:
    """Two-class SBM benchmark with ``round(noise*count)`` labels flipped.

    The first half of the graphs comes from ``models[0]`` (class 0), the
    second half from ``models[1]`` (class 1). Graphs depend only on ``seed``
    and the item index, so datasets that differ only in ``noise`` share
    their graphs.
    """
    if not 0 <= noise <= 0.5:
        raise ParameterError("noise must lie in [0, 0.5]")
    half = count // 2
    sizes = (half, count - half)
    graphs, labels = [], []
    for cls, (model, size) in enumerate(zip(models, sizes)):
        for _ in range(size):
            graphs.append(sbm(*model, seed=derive_seed(seed, "sbm_graph", len(graphs))))
            labels.append(cls)
    labels = np.asarray(labels, dtype=np.int64)
    n_flip = int(round(noise * count))
    if n_flip:
        flip = make_rng(seed, "label_noise", count, noise).choice(count, size=n_flip, replace=False)
        labels[flip] = 1 - labels[flip]
    return LabeledDataset(graphs, labels, name=f"sbm_n{noise:g}")



# ---------------------------------------------------------------- meshes


def dumbbell_mesh(seed: int = 0, radii=(1.0, 0.6), neck: float = 0.25, gap: float = 0.6,
                  n_rings: int = 20, n_theta: int = 12, jitter: float = 0.05,
                  ridges: Optional[Tuple[int, int]] = None, ridge_depth: float = 0.5):
    """Closed two-lobe surface of revolution and its per-vertex lobe labels.

    Lobes are spheres of the given ``radii`` joined by a cylinder of radius
    ``neck`` and length ``gap``. ``seed`` drives a small radial jitter of the
    lobe sizes and of every vertex, so different seeds give different but
    similar shapes. Label 0 marks the first lobe's half, 1 the second's.
    With ``ridges = (k1, k2)`` the cross-section of each half is scaled by
    ``1 + ridge_depth * cos(k * theta)``, giving the halves distinct numbers
    of longitudinal ridges.

    Returns
    -------
    mesh : TriangleMesh
    labels : ndarray of int64
    """
    rng = make_rng(seed, "dumbbell")
    r1, r2 = (r * (1 + jitter * rng.uniform(-1, 1)) for r in radii)
    c1, c2 = -(gap / 2 + r1), gap / 2 + r2
    z = np.linspace(c1 - r1, c2 + r2, n_rings + 2)[1:-1]
    prof = np.maximum.reduce([
        np.sqrt(np.maximum(r1 ** 2 - (z - c1) ** 2, 0.0)),
        np.sqrt(np.maximum(r2 ** 2 - (z - c2) ** 2, 0.0)),
        np.where(np.abs(z) <= gap / 2 + min(r1, r2) / 2, neck, 0.0),
    ])
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    ring = prof[:, None] * (1 + jitter * rng.uniform(-1, 1, (n_rings, n_theta)))
    verts = np.column_stack([
        (ring * np.cos(th)).ravel(), (ring * np.sin(th)).ravel(), np.repeat(z, n_theta)])
    verts = np.vstack([verts, [0, 0, c1 - r1], [0, 0, c2 + r2]])
    bottom, top = n_rings * n_theta, n_rings * n_theta + 1
    faces = []
    for r in range(n_rings - 1):
        for t in range(n_theta):
            a, b = r * n_theta + t, r * n_theta + (t + 1) % n_theta
            faces += [(a, b, a + n_theta), (b, b + n_theta, a + n_theta)]
    last = (n_rings - 1) * n_theta
    for t in range(n_theta):
        faces.append((bottom, (t + 1) % n_theta, t))
        faces.append((top, last + t, last + (t + 1) % n_theta))
    labels = (verts[:, 2] > 0).astype(np.int64)
    if ridges is not None:
        k = np.where(labels == 1, ridges[1], ridges[0])
        verts[:, :2] *= (1 + ridge_depth * np.cos(k * np.arctan2(verts[:, 1], verts[:, 0])))[:, None]
    return TriangleMesh(verts, np.asarray(faces)), labels
