"""Planar embedded graphs, their polygons, and benchmark topologies.

A :class:`Topology` carries an explicit rotation system: for each node the
clockwise cyclic order of its neighbors.  Faces are traced from the rotation
system, and the polygons used by the broadcast protocol are the bounded faces.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

INF = math.inf


class EmbeddingError(ValueError):
    """Rotation system is inconsistent or violates Euler's formula."""


class GenerationError(ValueError):
    """Generator parameters cannot satisfy the topology invariants."""


Arc = tuple[int, int]


def edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Topology:
    """Graph with a combinatorial embedding.

    ``rotation[v]`` lists the neighbors of ``v`` in clockwise order.  ``outer``
    names the vertex cycle of the outer face (it is excluded from the
    polygons).  Non-planar topologies such as the torus carry their polygons
    explicitly in ``declared_polygons``.
    """

    rotation: tuple[tuple[int, ...], ...]
    label: str = ""
    outer: tuple[int, ...] | None = None
    planar: bool = True
    declared_polygons: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        n = len(self.rotation)
        for v, nbrs in enumerate(self.rotation):
            if len(set(nbrs)) != len(nbrs):
                raise EmbeddingError(f"node {v} lists a neighbor twice")
            for u in nbrs:
                if not 0 <= u < n:
                    raise EmbeddingError(f"node {v} has unknown neighbor {u}")
                if u == v:
                    raise EmbeddingError(f"loop at node {v}")
                if v not in self.rotation[u]:
                    raise EmbeddingError(f"edge {v}-{u} missing from the cycle of {u}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], label: str = "",
                   planar: bool = False) -> "Topology":
        """Topology with sorted (not geometrically meaningful) rotations."""
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        return cls(tuple(tuple(sorted(a)) for a in adj), label=label, planar=planar)

    @property
    def n(self) -> int:
        return len(self.rotation)

    @cached_property
    def adj(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(r) for r in self.rotation)

    @cached_property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(edge_key(u, v) for u in range(self.n) for v in self.rotation[u])

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.rotation[v]

    def degree(self, v: int) -> int:
        return len(self.rotation[v])

    @cached_property
    def _position(self) -> tuple[dict[int, int], ...]:
        return tuple({u: i for i, u in enumerate(r)} for r in self.rotation)

    def next_arc(self, arc: Arc) -> Arc:
        """Successor of ``arc`` along its face."""
        u, v = arc
        rot = self.rotation[v]
        return (v, rot[(self._position[v][u] + 1) % len(rot)])

    def bfs(self, source: int, removed: frozenset[int] = frozenset()) -> list[float]:
        dist: list[float] = [INF] * self.n
        if source in removed:
            return dist
        dist[source] = 0
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for u in self.rotation[v]:
                if dist[u] == INF and u not in removed:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        return dist

    @cached_property
    def distances(self) -> tuple[tuple[float, ...], ...]:
        return tuple(tuple(self.bfs(v)) for v in range(self.n))

    def is_connected(self, removed: frozenset[int] = frozenset()) -> bool:
        alive = [v for v in range(self.n) if v not in removed]
        if not alive:
            return True
        dist = self.bfs(alive[0], removed)
        return all(dist[v] < INF for v in alive)

    # serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        doc: dict = {"label": self.label, "nodes": self.n,
                     "rotation": [list(r) for r in self.rotation]}
        if self.outer is not None:
            doc["outer"] = list(self.outer)
        if not self.planar:
            doc["planar"] = False
        if self.declared_polygons is not None:
            doc["polygons"] = [list(p) for p in self.declared_polygons]
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Topology":
        try:
            n = int(doc["nodes"])
            rotation = tuple(tuple(int(u) for u in r) for r in doc["rotation"])
        except (KeyError, TypeError, ValueError) as exc:
            raise EmbeddingError(f"malformed topology document: {exc}") from exc
        if len(rotation) != n:
            raise EmbeddingError(f"'nodes' is {n} but {len(rotation)} rotations given")
        polygons = doc.get("polygons")
        return cls(
            rotation,
            label=str(doc.get("label", "")),
            outer=tuple(doc["outer"]) if doc.get("outer") is not None else None,
            planar=bool(doc.get("planar", True)),
            declared_polygons=tuple(tuple(p) for p in polygons) if polygons else None,
        )

    @classmethod
    def loads(cls, text: str) -> "Topology":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Polygon:
    """A bounded face, stored as its circular vertex sequence."""

    vertices: tuple[int, ...]

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        vs = self.vertices
        return tuple(edge_key(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs)))

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    @cached_property
    def node_set(self) -> frozenset[int]:
        return frozenset(self.vertices)

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class Placement:
    byzantine: frozenset[int]
    source: int

    def __post_init__(self):
        if self.source in self.byzantine:
            raise ValueError("the source must be a correct node")

    def is_correct(self, v: int) -> bool:
        return v not in self.byzantine


# faces and polygons --------------------------------------------------------

def trace_faces(topology: Topology) -> list[list[Arc]]:
    """Every face of the embedding as its cyclic list of arcs."""
    seen: set[Arc] = set()
    faces = []
    for u in range(topology.n):
        for v in topology.rotation[u]:
            if (u, v) in seen:
                continue
            face = []
            arc = (u, v)
            while arc not in seen:
                seen.add(arc)
                face.append(arc)
                arc = topology.next_arc(arc)
            if arc != (u, v):
                raise EmbeddingError(f"face walk from {(u, v)} did not close")
            faces.append(face)
    return faces


def _is_outer(face: list[Arc], outer: tuple[int, ...]) -> bool:
    return len(face) == len(outer) and {a[0] for a in face} == set(outer)


def enumerate_polygons(topology: Topology) -> list[Polygon]:
    """Bounded faces of the embedding (declared cycles for non-planar graphs)."""
    return list(_polygons(topology))


_POLYGON_CACHE: dict[int, tuple[Topology, tuple[Polygon, ...]]] = {}


def _polygons(topology: Topology) -> tuple[Polygon, ...]:
    hit = _POLYGON_CACHE.get(id(topology))
    if hit is not None and hit[0] is topology:
        return hit[1]
    if topology.declared_polygons is not None:
        polys = tuple(Polygon(tuple(p)) for p in topology.declared_polygons)
    else:
        faces = trace_faces(topology)
        if topology.planar:
            euler = topology.n - len(topology.edges) + len(faces)
            if topology.is_connected() and euler != 2:
                raise EmbeddingError(f"V - E + F = {euler}, rotation system is not planar")
        if topology.outer is not None:
            outer = [f for f in faces if _is_outer(f, topology.outer)]
            if not outer:
                raise EmbeddingError(f"outer face {topology.outer} not found among faces")
            drop = outer[0]
        elif topology.planar:
            drop = max(faces, key=len)
        else:
            drop = None
        polys = tuple(Polygon(tuple(a[0] for a in f)) for f in faces if f is not drop)
    _POLYGON_CACHE[id(topology)] = (topology, polys)
    return polys


def compute_Z(topology: Topology) -> int:
    return max(len(p) for p in _polygons(topology))


def compute_Y(topology: Topology) -> int:
    return max(topology.degree(v) for v in range(topology.n))


def polygon_adjacent(p: Polygon, q: Polygon) -> bool:
    return bool(p.edge_set & q.edge_set)


def polygon_neighbors(p: Polygon, q: Polygon) -> bool:
    return bool(p.node_set & q.node_set)


def diameter(topology: Topology) -> float:
    return max(max(row) for row in topology.distances)


def id_bits(n: int) -> int:
    """Identifier width X: ceil(log2 n) rounded up to whole bytes."""
    bits = math.ceil(math.log2(n)) if n > 1 else 1
    return 8 * max(1, math.ceil(bits / 8))


def min_byzantine_distance(topology: Topology, placement: Placement) -> float:
    byz = sorted(placement.byzantine)
    if len(byz) < 2:
        return INF
    dist = topology.distances
    return min(dist[a][b] for a, b in itertools.combinations(byz, 2))


def correct_polygons(topology: Topology, placement: Placement) -> list[Polygon]:
    return [p for p in _polygons(topology) if not (p.node_set & placement.byzantine)]


def polygons_connected(polys: Sequence[Polygon]) -> bool:
    """Whether ``polys`` is connected under edge-sharing adjacency."""
    if not polys:
        return True
    by_edge: dict[tuple[int, int], list[int]] = {}
    for i, p in enumerate(polys):
        for e in p.edges:
            by_edge.setdefault(e, []).append(i)
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for e in polys[i].edges:
            for j in by_edge[e]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
    return len(seen) == len(polys)


def correct_polygons_connected(topology: Topology, placement: Placement) -> bool:
    return polygons_connected(correct_polygons(topology, placement))


# connectivity --------------------------------------------------------------

def _local_cut(topology: Topology, s: int, t: int, k: int) -> frozenset[int] | None:
    """A node cut of size < k separating non-adjacent s and t, or None.

    Unit-capacity max flow on the node-split graph: node v becomes v_in -> v_out
    with capacity 1 (infinite for s and t).
    """
    # residual capacities keyed by (a, b) with a, b in {2v (in), 2v+1 (out)}
    cap: dict[tuple[int, int], int] = {}
    out: dict[int, list[int]] = {}

    def add(a, b, c):
        if (a, b) not in cap:
            out.setdefault(a, []).append(b)
            out.setdefault(b, []).append(a)
            cap.setdefault((b, a), 0)
        cap[(a, b)] = cap.get((a, b), 0) + c

    big = k + 1
    for v in range(topology.n):
        add(2 * v, 2 * v + 1, big if v in (s, t) else 1)
        for u in topology.rotation[v]:
            add(2 * v + 1, 2 * u, big)
    src, snk = 2 * s + 1, 2 * t
    flow = 0
    while flow < k:
        parent = {src: src}
        queue = deque([src])
        while queue and snk not in parent:
            a = queue.popleft()
            for b in out[a]:
                if b not in parent and cap[(a, b)] > 0:
                    parent[b] = a
                    queue.append(b)
        if snk not in parent:
            reach = set(parent)
            return frozenset(v for v in range(topology.n)
                             if 2 * v in reach and 2 * v + 1 not in reach)
        b = snk
        while b != src:
            a = parent[b]
            cap[(a, b)] -= 1
            cap[(b, a)] += 1
            b = a
        flow += 1
    return None


def find_small_cut(topology: Topology, k: int) -> frozenset[int] | None:
    """A node cut with fewer than ``k`` nodes, or None if the graph is k-connected.

    Even's scheme: any cut of size < k misses one of the first k nodes, say v_i
    with i minimal, and separates it from some later node.
    """
    n = topology.n
    if k < 1:
        raise ValueError("k must be at least 1")
    if k >= n:
        raise ValueError(f"k={k} is not below the node count {n}")
    if not topology.is_connected():
        return frozenset()
    for i in range(k):
        for j in range(i + 1, n):
            if j in topology.adj[i]:
                continue
            cut = _local_cut(topology, i, j, k)
            if cut is not None:
                return cut
    return None


def is_k_connected(topology: Topology, k: int) -> bool:
    return find_small_cut(topology, k) is None


def is_k_connected_exhaustive(topology: Topology, k: int) -> bool:
    """Reference check: remove every node subset of size < k."""
    if k >= topology.n:
        raise ValueError(f"k={k} is not below the node count {topology.n}")
    nodes = range(topology.n)
    for size in range(k):
        for cut in itertools.combinations(nodes, size):
            if not topology.is_connected(frozenset(cut)):
                return False
    return True


# generators ----------------------------------------------------------------

def _rotation_from_positions(adj: Sequence[set[int]], pos: Mapping[int, tuple[float, float]],
                             toward: Mapping[tuple[int, int], float] | None = None,
                             ) -> tuple[tuple[int, ...], ...]:
    """Clockwise neighbor order from a straight-line drawing.

    ``toward[(v, u)]`` overrides the direction angle from v to u (used for a
    hub placed at infinity).
    """
    toward = toward or {}
    rotation = []
    for v, nbrs in enumerate(adj):
        def angle(u, v=v):
            if (v, u) in toward:
                return toward[(v, u)]
            (x0, y0), (x1, y1) = pos[v], pos[u]
            return math.atan2(y1 - y0, x1 - x0)
        rotation.append(tuple(sorted(nbrs, key=lambda u: -angle(u))))
    return tuple(rotation)


def _capped_cylinder(w: int, h: int, diagonals: str | float, rng: random.Random,
                     label: str) -> Topology:
    """Rings C_w x P_h with a hub inside the first ring and one beyond the last.

    Node 0 is the inner hub, node n-1 the outer hub; ring node (r, j) is
    1 + r*w + j.  ``diagonals`` is 'all' (every cell split, a triangulation) or
    a probability of splitting each quadrilateral cell.
    """
    if w < 4 or h < 1:
        raise GenerationError(f"capped cylinder needs w >= 4 and h >= 1, got w={w}, h={h}")
    n = w * h + 2
    hub_in, hub_out = 0, n - 1

    def node(r, j):
        return 1 + r * w + (j % w)

    adj: list[set[int]] = [set() for _ in range(n)]

    def link(a, b):
        adj[a].add(b)
        adj[b].add(a)

    pos = {hub_in: (0.0, 0.0)}
    toward = {}
    for r in range(h):
        for j in range(w):
            theta = 2 * math.pi * j / w
            pos[node(r, j)] = ((r + 1) * math.cos(theta), (r + 1) * math.sin(theta))
            link(node(r, j), node(r, j + 1))
            if r == 0:
                link(hub_in, node(r, j))
            if r + 1 < h:
                link(node(r, j), node(r + 1, j))
                split = diagonals == "all" or (diagonals and rng.random() < float(diagonals))
                if split:
                    link(node(r, j), node(r + 1, j + 1))
            else:
                link(node(r, j), hub_out)
                toward[(node(r, j), hub_out)] = math.atan2(math.sin(theta), math.cos(theta))
                # seen from the point at infinity the ring runs the other way
                toward[(hub_out, node(r, j))] = -theta
    rotation = _rotation_from_positions(adj, pos, toward)
    last = h - 1
    outer = (hub_out, node(last, 0), node(last, 1))
    return Topology(rotation, label=label, outer=outer)


def torus(w: int, h: int) -> Topology:
    """w x h torus: 4-regular, non-planar, polygons are the declared unit cells."""
    if w < 5 or h < 5:
        raise GenerationError(f"torus needs w, h >= 5, got {w}x{h}")

    def node(i, j):
        return (i % w) * h + (j % h)

    rotation = []
    for i in range(w):
        for j in range(h):
            # north, east, south, west
            rotation.append((node(i, j + 1), node(i + 1, j), node(i, j - 1), node(i - 1, j)))
    cells = tuple((node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1))
                  for i in range(w) for j in range(h))
    return Topology(tuple(rotation), label=f"torus({w},{h})", planar=False,
                    declared_polygons=cells)


def octahedron() -> Topology:
    return _capped_cylinder(4, 1, 0.0, random.Random(0), "octahedron")


def grid_patch(rows: int, cols: int) -> Topology:
    """Planar rows x cols grid (a unit-test fixture; not 4-connected)."""
    def node(i, j):
        return i * cols + j

    adj: list[set[int]] = [set() for _ in range(rows * cols)]
    pos = {}
    for i in range(rows):
        for j in range(cols):
            pos[node(i, j)] = (float(j), float(-i))
            for di, dj in ((0, 1), (1, 0)):
                if i + di < rows and j + dj < cols:
                    adj[node(i, j)].add(node(i + di, j + dj))
                    adj[node(i + di, j + dj)].add(node(i, j))
    ring = ([node(0, j) for j in range(cols)] + [node(i, cols - 1) for i in range(1, rows)]
            + [node(rows - 1, j) for j in range(cols - 2, -1, -1)]
            + [node(i, 0) for i in range(rows - 2, 0, -1)])
    return Topology(_rotation_from_positions(adj, pos), label=f"grid({rows},{cols})",
                    outer=tuple(ring))


def complete(n: int) -> Topology:
    return Topology.from_edges(n, itertools.combinations(range(n), 2), label=f"K{n}")


def path_graph(n: int) -> Topology:
    return Topology.from_edges(n, [(i, i + 1) for i in range(n - 1)], label=f"path({n})")


def triangle() -> Topology:
    return Topology(((1, 2), (2, 0), (0, 1)), label="K3", outer=(0, 1, 2))


@dataclass(frozen=True)
class CriticalNetwork:
    """The D = Z = 4 network together with the data the mirror attack needs."""

    topology: Topology
    placement: Placement
    cut: tuple[int, ...]
    inner: frozenset[int]
    outer_region: frozenset[int]
    automorphism: tuple[int, ...]
    correct_cut: tuple[int, ...] = field(default=())


def _critical() -> CriticalNetwork:
    # source s at the center; ring e_i (angle 90i) / a_i (angle 45+90i);
    # cut k_i; outer ring f_i / b_i; outermost ring g_i bounding the outer face
    names = ["s"] + [f"{c}{i}" for c in "eakfbg" for i in range(4)]
    idx = {name: i for i, name in enumerate(names)}
    n = len(names)
    adj: list[set[int]] = [set() for _ in range(n)]

    def link(a, b):
        adj[idx[a]].add(idx[b])
        adj[idx[b]].add(idx[a])

    pos = {idx["s"]: (0.0, 0.0)}
    radius = {"e": 1, "a": 1, "k": 2, "f": 3, "b": 3, "g": 5}
    for c in "eakfbg":
        for i in range(4):
            deg = 90 * i + (45 if c in "abg" else 0)
            r = radius[c]
            pos[idx[f"{c}{i}"]] = (r * math.cos(math.radians(deg)), r * math.sin(math.radians(deg)))
    for i in range(4):
        j = (i + 1) % 4
        link("s", f"e{i}"), link("s", f"a{i}")
        link(f"e{i}", f"a{i}"), link(f"a{i}", f"e{j}")
        link(f"e{i}", f"k{i}"), link(f"a{i}", f"k{i}"), link(f"a{i}", f"k{j}")
        link(f"k{i}", f"f{i}"), link(f"k{i}", f"b{i}"), link(f"b{i}", f"k{j}")
        link(f"f{i}", f"b{i}"), link(f"b{i}", f"f{j}")
        link(f"g{i}", f"f{i}"), link(f"g{i}", f"b{i}"), link(f"g{i}", f"f{j}")
        link(f"g{i}", f"g{j}")
    rotation = _rotation_from_positions(adj, pos)
    topo = Topology(rotation, label="critical",
                    outer=tuple(idx[f"g{i}"] for i in range(4)))

    def reflect(name):
        if name == "s":
            return name
        c, i = name[0], int(name[1])
        # mirror across the 45 degree axis: angle x -> 90 - x
        return f"{c}{(1 - i) % 4}" if c in "ekf" else f"{c}{(-i) % 4}"

    auto = tuple(idx[reflect(name)] for name in names)
    cut = tuple(idx[f"k{i}"] for i in range(4))
    byz = frozenset({idx["k1"], idx["k3"]})
    inner = frozenset(idx[x] for x in names if x[0] in "sea")
    outer_region = frozenset(idx[x] for x in names if x[0] in "fbg")
    return CriticalNetwork(topo, Placement(byz, idx["s"]), cut, inner, outer_region, auto,
                           correct_cut=(idx["k0"], idx["k2"]))


def is_automorphism(topology: Topology, perm: Sequence[int]) -> bool:
    if sorted(perm) != list(range(topology.n)):
        return False
    return all(edge_key(perm[u], perm[v]) in topology.edges for u, v in topology.edges)


def critical_counterexample() -> CriticalNetwork:
    """Build the D = Z = 4 network and machine-check every constraint."""
    net = _critical()
    topo, placement = net.topology, net.placement
    checks = {
        "planar embedding": len(enumerate_polygons(topo)) + 1
        == 2 - topo.n + len(topo.edges),
        "4-connected": is_k_connected(topo, 4),
        "Z == 4": compute_Z(topo) == 4,
        "D == 4": min_byzantine_distance(topo, placement) == 4,
        "two byzantine cut nodes": len(placement.byzantine) == 2
        and placement.byzantine <= set(net.cut),
        "cut isolates the source": not topo.is_connected(frozenset(net.cut))
        and all(topo.distances[placement.source][v] < INF for v in net.inner)
        and all(topo.bfs(placement.source, frozenset(net.cut))[v] == INF
                for v in net.outer_region),
        "automorphism": is_automorphism(topo, net.automorphism),
        "swaps correct and byzantine cut nodes": {net.automorphism[c] for c in net.correct_cut}
        == set(placement.byzantine),
        "fixes the regions": {net.automorphism[v] for v in net.inner} == net.inner
        and {net.automorphism[v] for v in net.outer_region} == net.outer_region,
    }
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        raise AssertionError(f"critical network construction is broken: {failed}")
    return net


def validate_protocol_topology(topology: Topology) -> None:
    if any(topology.degree(v) < 4 for v in range(topology.n)):
        raise GenerationError(f"{topology.label}: some node has degree < 4")
    if topology.planar:
        enumerate_polygons(topology)  # raises on a non-planar rotation system
    if not is_k_connected(topology, 4):
        raise GenerationError(f"{topology.label}: not 4-connected "
                              f"(cut {sorted(find_small_cut(topology, 4))})")


def generate(kind: str, params: Mapping | None = None, seed: int = 0) -> Topology:
    """Build a benchmark topology; a pure function of (kind, params, seed).

    Kinds: ``torus`` (w, h), ``quad_annulus`` (w, h, diagonals),
    ``quadrangulation`` (n, diagonals), ``triangulation`` (n or w, h),
    ``critical``, ``octahedron``.
    """
    params = dict(params or {})
    rng = random.Random(seed)
    if kind == "torus":
        return torus(int(params.get("w", 5)), int(params.get("h", params.get("w", 5))))
    if kind == "quad_annulus":
        w, h = int(params.get("w", 6)), int(params.get("h", 4))
        d = float(params.get("diagonals", 0.0))
        topo = _capped_cylinder(w, h, d, rng, f"quad_annulus({w},{h})")
    elif kind == "quadrangulation":
        k = int(params.get("n", 6))
        d = float(params.get("diagonals", 0.0))
        topo = _capped_cylinder(k, k, d, rng, f"quadrangulation({k})")
    elif kind == "triangulation":
        w = int(params.get("w", params.get("n", 6)))
        h = int(params.get("h", params.get("n", 6)))
        topo = _capped_cylinder(w, h, "all", rng, f"triangulation({w},{h})")
    elif kind == "critical":
        return critical_counterexample().topology
    elif kind == "octahedron":
        return octahedron()
    else:
        raise GenerationError(f"unknown topology kind {kind!r}")
    validate_protocol_topology(topo)
    return topo
