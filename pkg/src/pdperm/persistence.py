"""0-dimensional and extended persistence of vertex functions on graphs.

Every routine breaks ties in ``f`` by vertex index, so the sweep order is a
strict total order and the fast sweeps and the matrix-reduction oracle agree
exactly.

Point kinds and their orientation::

    ORD0  downward branch      birth <= death   (ascending sweep merge)
    REL1  upward branch        birth >= death   (descending sweep merge)
    EXT0  connected component  birth <= death   (component min, max)
    EXT1  independent loop     birth >= death
    SUB0  sublevel 0-dim       birth <= death
    SUP0  superlevel 0-dim     birth >= death

Zero-persistence ORD0/REL1/SUB0/SUP0 merges are dropped. Essential classes
(EXT0, EXT1, and the essential SUB0/SUP0 points) are always kept, so
``|EXT0|`` is the number of components and ``|EXT1|`` the first Betti number.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numba
import numpy as np

from .errors import FormatError, ParameterError, SchemaError
from .graphio import Graph

__all__ = [
    "Kind",
    "PersistenceDiagram",
    "sublevel_pd0",
    "superlevel_pd0",
    "extended_pd",
    "reduce_extended",
    "diagram_stats",
    "write_diagrams",
    "read_diagrams",
]


class Kind(enum.IntEnum):
    ORD0 = 0
    REL1 = 1
    EXT0 = 2
    EXT1 = 3
    SUB0 = 4
    SUP0 = 5

    @classmethod
    def parse(cls, name) -> "Kind":
        if isinstance(name, Kind):
            return name
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise ParameterError(f"unknown point kind {name!r}") from None


#: kinds whose points satisfy birth <= death
ASCENDING = frozenset({Kind.ORD0, Kind.EXT0, Kind.SUB0})
EXTENDED_KINDS = (Kind.ORD0, Kind.REL1, Kind.EXT0, Kind.EXT1)


@dataclass(eq=False)
class PersistenceDiagram:
    """Multiset of typed persistence points plus provenance."""

    births: np.ndarray
    deaths: np.ndarray
    kinds: np.ndarray
    dataset: str = "-"
    graph_id: str = "-"
    filtration: str = "-"
    fake: bool = False

    def __post_init__(self):
        self.births = np.asarray(self.births, dtype=float).ravel()
        self.deaths = np.asarray(self.deaths, dtype=float).ravel()
        self.kinds = np.asarray(self.kinds, dtype=np.int8).ravel()
        if not (len(self.births) == len(self.deaths) == len(self.kinds)):
            raise ParameterError("births, deaths and kinds differ in length")

    @classmethod
    def empty(cls, **prov) -> "PersistenceDiagram":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0, dtype=np.int8), **prov)

    @classmethod
    def from_points(cls, points, kind=Kind.ORD0, **prov) -> "PersistenceDiagram":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        kinds = np.full(len(pts), int(Kind.parse(kind)), dtype=np.int8)
        return cls(pts[:, 0], pts[:, 1], kinds, **prov)

    def __len__(self):
        return len(self.births)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.births, self.deaths])

    @property
    def provenance(self) -> dict:
        return dict(dataset=self.dataset, graph_id=self.graph_id, filtration=self.filtration, fake=self.fake)

    def with_points(self, births, deaths, kinds=None, **prov) -> "PersistenceDiagram":
        meta = {**self.provenance, **prov}
        return PersistenceDiagram(births, deaths, self.kinds if kinds is None else kinds, **meta)

    def canonical(self) -> "PersistenceDiagram":
        order = np.lexsort((self.deaths, self.births, self.kinds))
        return self.with_points(self.births[order], self.deaths[order], self.kinds[order])

    def of_kind(self, *kinds) -> np.ndarray:
        """``(k, 2)`` array of the points whose kind is in ``kinds``."""
        sel = np.isin(self.kinds, [int(Kind.parse(k)) for k in kinds])
        return self.points[sel]

    def same_multiset(self, other: "PersistenceDiagram") -> bool:
        a, b = self.canonical(), other.canonical()
        return (np.array_equal(a.kinds, b.kinds) and np.array_equal(a.births, b.births)
                and np.array_equal(a.deaths, b.deaths))

    def oriented(self) -> np.ndarray:
        """Points mirrored where needed so that birth <= death."""
        return np.column_stack([np.minimum(self.births, self.deaths), np.maximum(self.births, self.deaths)])

    def __repr__(self):
        counts = {Kind(k).name: int(c) for k, c in zip(*np.unique(self.kinds, return_counts=True))}
        return f"PersistenceDiagram({len(self)} points {counts}, graph={self.graph_id!r}, fake={self.fake})"


# ---------------------------------------------------------------- sweeps


def _vertex_ranks(f: np.ndarray) -> np.ndarray:
    """Rank of each vertex in the (value, index) total order."""
    order = np.lexsort((np.arange(len(f)), f))
    rank = np.empty(len(f), dtype=np.int64)
    rank[order] = np.arange(len(f))
    return rank


def _check_function(g: Graph, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n_vertices,):
        raise ParameterError(f"vertex function has shape {f.shape}, graph has {g.n_vertices} vertices")
    if not np.all(np.isfinite(f)):
        raise ParameterError("vertex function must be finite")
    return f


def _lower_star_edges(edges: np.ndarray, rank: np.ndarray) -> np.ndarray:
    """Edges as rank pairs ``(hi, lo)``, sorted in sweep order."""
    if len(edges) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    a, b = rank[edges[:, 0]], rank[edges[:, 1]]
    hi, lo = np.maximum(a, b), np.minimum(a, b)
    order = np.lexsort((lo, hi))
    return np.column_stack([hi[order], lo[order]])


@numba.njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


@numba.njit(cache=True)
def _sweep0(n, edges):
    """Union-find over rank-labelled vertices; ``edges`` rows are ``(hi, lo)`` in sweep order.

    Returns merge pairs ``(younger birth rank, edge hi rank)``, a mask of
    cycle-closing edges, and for every vertex the root of its component.
    Component roots are their minimum rank (elder rule).
    """
    parent = np.arange(n)
    m = edges.shape[0]
    pairs = np.empty((m, 2), dtype=np.int64)
    n_pairs = 0
    cycle = np.zeros(m, dtype=np.bool_)
    for i in range(m):
        hi, lo = edges[i, 0], edges[i, 1]
        ra, rb = _find(parent, hi), _find(parent, lo)
        if ra == rb:
            cycle[i] = True
            continue
        young, old = (ra, rb) if ra > rb else (rb, ra)
        pairs[n_pairs, 0] = young
        pairs[n_pairs, 1] = hi
        n_pairs += 1
        parent[young] = old
    roots = np.empty(n, dtype=np.int64)
    for v in range(n):
        roots[v] = _find(parent, v)
    return pairs[:n_pairs], cycle, roots


@numba.njit(cache=True)
def _loop_pairs(n, edges, max_deg):
    """Birth/death ranks of the loop classes of the ascending sweep.

    ``edges`` rows are ``(hi, lo)`` rank pairs in ascending sweep order. The
    loop closed by edge ``e`` dies at the largest ``t`` such that the
    endpoints of ``e`` are joined, through earlier edges, by a path whose
    vertices all have rank >= ``t``. That bottleneck value is read off a
    maximum spanning forest (edge weight = lower endpoint rank) maintained
    incrementally.
    """
    nbr = np.full((n, max_deg), -1, dtype=np.int64)
    deg = np.zeros(n, dtype=np.int64)
    parent_uf = np.arange(n)
    prev = np.full(n, -1, dtype=np.int64)
    stamp = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    m = edges.shape[0]
    out = np.empty((m, 2), dtype=np.int64)
    n_out = 0
    for i in range(m):
        u, v = edges[i, 0], edges[i, 1]
        ru, rv = _find(parent_uf, u), _find(parent_uf, v)
        if ru != rv:
            parent_uf[max(ru, rv)] = min(ru, rv)
            nbr[u, deg[u]] = v
            deg[u] += 1
            nbr[v, deg[v]] = u
            deg[v] += 1
            continue
        # forest path u -> v by BFS from u
        tag = i + 1
        stamp[u] = tag
        prev[u] = -1
        head, tail = 0, 1
        queue[0] = u
        while head < tail:
            x = queue[head]
            head += 1
            if x == v:
                break
            for k in range(deg[x]):
                y = nbr[x, k]
                if stamp[y] != tag:
                    stamp[y] = tag
                    prev[y] = x
                    queue[tail] = y
                    tail += 1
        best, ba, bb = n, -1, -1
        x = v
        while prev[x] != -1:
            y = prev[x]
            w = min(x, y)
            if w < best:
                best, ba, bb = w, x, y
            x = y
        out[n_out, 0] = u
        out[n_out, 1] = min(best, v)
        n_out += 1
        if v > best:
            # swap the bottleneck edge for e to keep the forest maximum
            for a, b in ((ba, bb), (bb, ba)):
                for k in range(deg[a]):
                    if nbr[a, k] == b:
                        deg[a] -= 1
                        nbr[a, k] = nbr[a, deg[a]]
                        nbr[a, deg[a]] = -1
                        break
            nbr[u, deg[u]] = v
            deg[u] += 1
            nbr[v, deg[v]] = u
            deg[v] += 1
    return out[:n_out]


def _components_extrema(roots: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Min and max rank of every component, roots given per rank."""
    uniq, inv = np.unique(roots, return_inverse=True)
    hi = np.full(len(uniq), -1, dtype=np.int64)
    np.maximum.at(hi, inv, np.arange(len(roots)))
    return uniq, hi


def _sweep_diagram(g: Graph, f: np.ndarray, descending: bool):
    """Finite merge pairs and essential pairs (as values) of one 0-dim sweep."""
    n = g.n_vertices
    rank = _vertex_ranks(f)
    if descending:
        rank = n - 1 - rank
    by_rank = np.empty(n)
    by_rank[rank] = f
    edges = _lower_star_edges(g.edges, rank)
    pairs, cycle, roots = _sweep0(n, edges)
    finite = by_rank[pairs] if len(pairs) else np.zeros((0, 2))
    finite = finite[finite[:, 0] != finite[:, 1]]
    lo, hi = _components_extrema(roots)
    essential = np.column_stack([by_rank[lo], by_rank[hi]])
    return finite, essential, edges, cycle, by_rank


def _assemble(parts, **prov) -> PersistenceDiagram:
    pts = [p for p, _ in parts]
    kinds = [np.full(len(p), int(k), dtype=np.int8) for p, k in parts]
    pts = np.concatenate(pts) if pts else np.zeros((0, 2))
    d = PersistenceDiagram(pts[:, 0], pts[:, 1], np.concatenate(kinds), **prov)
    return d.canonical()


def sublevel_pd0(g: Graph, f, **prov) -> PersistenceDiagram:
    """0-dimensional sublevel persistence (kind SUB0).

    Each component's essential class is closed at the component maximum.
    """
    f = _check_function(g, f)
    finite, essential, *_ = _sweep_diagram(g, f, descending=False)
    return _assemble([(finite, Kind.SUB0), (essential, Kind.SUB0)], **prov)


def superlevel_pd0(g: Graph, f, **prov) -> PersistenceDiagram:
    """0-dimensional superlevel persistence (kind SUP0, birth >= death).

    Each component's essential class is closed at the component minimum.
    """
    f = _check_function(g, f)
    finite, essential, *_ = _sweep_diagram(g, f, descending=True)
    return _assemble([(finite, Kind.SUP0), (essential, Kind.SUP0)], **prov)


def extended_pd(g: Graph, f, **prov) -> PersistenceDiagram:
    """Extended persistence diagram (ORD0, REL1, EXT0, EXT1) of a vertex function."""
    f = _check_function(g, f)
    ord0, ext0, up_edges, cycle, by_rank = _sweep_diagram(g, f, descending=False)
    rel1, _, _, _, _ = _sweep_diagram(g, f, descending=True)
    loops = up_edges[cycle]
    if len(loops):
        max_deg = int(g.degrees().max())
        ext1 = by_rank[_loop_pairs(g.n_vertices, up_edges, max_deg)]
    else:
        ext1 = np.zeros((0, 2))
    return _assemble([(ord0, Kind.ORD0), (rel1, Kind.REL1), (ext0, Kind.EXT0), (ext1, Kind.EXT1)], **prov)


# ---------------------------------------------------------------- oracle


def reduce_extended(g: Graph, f, **prov) -> PersistenceDiagram:
    """Extended diagram by Z/2 column reduction of the coned filtration.

    The filtration is a cone vertex ``w`` (placed first so that it carries
    the reduced class), the ascending lower-star filtration of ``g``, then the
    cone ``w * X^a`` over the descending upper-star filtration. Cubic in the
    number of simplices; intended as a reference for small graphs.
    """
    f = _check_function(g, f)
    n = g.n_vertices
    rank = _vertex_ranks(f)
    by_rank = np.empty(n)
    by_rank[rank] = f
    cells = [("w", ())]  # (tag, data)
    index = {}
    cells.extend(("v", (r,)) for r in range(n))
    for r in range(n):
        index[("v", r)] = r + 1
    up = _lower_star_edges(g.edges, rank)
    for hi, lo in up:
        index[("e", hi, lo)] = len(cells)
        cells.append(("e", (hi, lo)))
    # descending part: cone edges and cone triangles in upper-star order
    down = sorted(((hi, lo) for hi, lo in up), key=lambda e: (-e[1], -e[0]))
    by_lo = {}
    for hi, lo in down:
        by_lo.setdefault(lo, []).append((hi, lo))
    for r in range(n - 1, -1, -1):
        index[("wv", r)] = len(cells)
        cells.append(("wv", (r,)))
        for hi, lo in by_lo.get(r, ()):
            cells.append(("we", (hi, lo)))

    columns = []
    for tag, data in cells:
        if tag in ("w", "v"):
            columns.append(set())
        elif tag == "e":
            columns.append({index[("v", data[0])], index[("v", data[1])]})
        elif tag == "wv":
            columns.append({0, index[("v", data[0])]})
        else:
            hi, lo = data
            columns.append({index[("e", hi, lo)], index[("wv", hi)], index[("wv", lo)]})

    low_of = {}
    pairs = []
    for j, col in enumerate(columns):
        while col:
            low = max(col)
            k = low_of.get(low)
            if k is None:
                low_of[low] = j
                pairs.append((low, j))
                break
            col ^= columns[k]

    paired = {i for p in pairs for i in p}
    unpaired = [i for i in range(len(cells)) if i not in paired]
    assert unpaired == [0], "cone over the graph must be acyclic apart from the reduced class"

    parts = {k: [] for k in EXTENDED_KINDS}
    for low, j in pairs:
        (ta, da), (tb, db) = cells[low], cells[j]
        if ta == "v" and tb == "e":
            parts[Kind.ORD0].append((by_rank[da[0]], by_rank[db[0]]))
        elif ta == "v" and tb == "wv":
            parts[Kind.EXT0].append((by_rank[da[0]], by_rank[db[0]]))
        elif ta == "e" and tb == "we":
            parts[Kind.EXT1].append((by_rank[da[0]], by_rank[db[1]]))
        elif ta == "wv" and tb == "we":
            parts[Kind.REL1].append((by_rank[da[0]], by_rank[db[1]]))
        else:
            raise AssertionError(f"unexpected pair {ta}-{tb}")
    out = []
    for k, pts in parts.items():
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        if k in (Kind.ORD0, Kind.REL1):
            pts = pts[pts[:, 0] != pts[:, 1]]
        out.append((pts, k))
    return _assemble(out, **prov)


# ---------------------------------------------------------------- statistics & I/O


def diagram_stats(d: PersistenceDiagram) -> tuple[int, int]:
    """``(number of points, number near the diagonal)``.

    A point is near the diagonal when its lifetime ``|death - birth|`` is
    below a tenth of the largest lifetime in the diagram.
    """
    if len(d) == 0:
        return 0, 0
    life = np.abs(d.deaths - d.births)
    return len(d), int((life < life.max() / 10).sum())


DIAGRAM_FORMAT = "pdperm-diagrams/1"


def write_diagrams(diagrams: Iterable[PersistenceDiagram], path: str) -> None:
    """Write one block per diagram: a ``#`` header then ``kind birth death`` lines."""
    with open(path, "w") as fh:
        fh.write(f"## {DIAGRAM_FORMAT}\n")
        for d in diagrams:
            c = d.canonical()
            fh.write(f"# {c.dataset} {c.graph_id} {c.filtration} {'fake' if c.fake else 'true'}\n")
            for k, b, e in zip(c.kinds, c.births, c.deaths):
                fh.write(f"{Kind(k).name.lower()} {b:.17g} {e:.17g}\n")


def read_diagrams(path: str) -> list[PersistenceDiagram]:
    out, cur, prov = [], None, None

    def flush():
        if prov is not None:
            pts = np.asarray([(b, e) for _, b, e in cur], dtype=float).reshape(-1, 2)
            kinds = np.asarray([k for k, _, _ in cur], dtype=np.int8)
            out.append(PersistenceDiagram(pts[:, 0], pts[:, 1], kinds, **prov))

    with open(path) as fh:
        lines = [ln.rstrip("\r\n") for ln in fh]
    if lines and lines[0].startswith("## "):
        version = lines[0][3:].strip()
        if version != DIAGRAM_FORMAT:
            raise SchemaError(f"{path}: format {version!r}, expected {DIAGRAM_FORMAT!r}")
        lines = lines[1:]
    for ln in lines:
        if not ln.strip():
            continue
        if ln.startswith("#"):
            flush()
            tok = ln[1:].split()
            if len(tok) != 4 or tok[3] not in ("true", "fake"):
                raise FormatError(f"{path}: bad diagram header {ln!r}")
            prov = dict(dataset=tok[0], graph_id=tok[1], filtration=tok[2], fake=tok[3] == "fake")
            cur = []
        else:
            if prov is None:
                raise FormatError(f"{path}: point line before any header")
            tok = ln.split()
            if len(tok) != 3:
                raise FormatError(f"{path}: bad point line {ln!r}")
            cur.append((int(Kind.parse(tok[0])), float(tok[1]), float(tok[2])))
    flush()
    return out
