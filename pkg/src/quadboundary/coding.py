"""Codes of pointed quadrangulations with a boundary, and the maps themselves.

A code is a Dyck path of length 2p (the boundary labels read from a closest
boundary edge, shifted down by the base d) with one well-labelled tree per
descending step. ``decode`` closes the labelled mobile into a planar map;
``encode`` reads the code back from BFS labels.

Maps are rotation systems on half-edges ("darts"). Dart ``h`` and
``h ^ 1`` form an edge, ``tail[h]`` is the vertex ``h`` leaves from, and
``sigma[h]`` is the next dart counterclockwise around that vertex. A corner
is named by the dart that opens it: corner ``h`` is the sector between ``h``
and ``sigma[h]``. Faces are the orbits of ``h -> sigma[h] ^ 1``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterator, Sequence


@dataclass(frozen=True)
class WellLabeledTree:
    """Plane tree with integer labels; children are ordered."""

    label: int
    children: tuple["WellLabeledTree", ...] = ()

    @property
    def root_label(self) -> int:
        return self.label

    @cached_property
    def edges(self) -> int:
        return sum(1 + c.edges for c in self.children)

    def labels(self) -> Iterator[int]:
        yield self.label
        for c in self.children:
            yield from c.labels()

    def shifted(self, k: int) -> "WellLabeledTree":
        return WellLabeledTree(self.label + k, tuple(c.shifted(k) for c in self.children))

    def to_nested(self) -> list:
        return [self.label, *(c.to_nested() for c in self.children)]

    @classmethod
    def from_nested(cls, data: Sequence) -> "WellLabeledTree":
        return cls(int(data[0]), tuple(cls.from_nested(c) for c in data[1:]))


@dataclass(frozen=True)
class BoundaryCode:
    """Base d, Dyck path steps (+1/-1), and one tree per descent in path order."""

    base: int
    steps: tuple[int, ...]
    trees: tuple[WellLabeledTree, ...]

    @cached_property
    def heights(self) -> tuple[int, ...]:
        h = [0]
        for s in self.steps:
            h.append(h[-1] + s)
        return tuple(h)

    @property
    def p(self) -> int:
        return len(self.steps) // 2

    @property
    def n(self) -> int:
        return sum(t.edges for t in self.trees)

    def descents(self) -> list[int]:
        return [i for i, s in enumerate(self.steps) if s == -1]

    def minima_count(self) -> int:
        """Number of boundary positions at the minimal label (closest boundary edges)."""
        return sum(1 for h in self.heights[:-1] if h == 0)

    def to_json(self) -> str:
        return json.dumps({
            "base": self.base,
            "steps": list(self.steps),
            "trees": [t.to_nested() for t in self.trees],
        })

    @classmethod
    def from_json(cls, text: str) -> "BoundaryCode":
        data = json.loads(text)
        return cls(int(data["base"]), tuple(int(s) for s in data["steps"]),
                   tuple(WellLabeledTree.from_nested(t) for t in data["trees"]))


@dataclass(frozen=True)
class QuadMap:
    """Rotation system with a root dart on the external face and an optional origin.

    The root dart leaves a boundary vertex and runs along the boundary; the
    external face is the face containing corner ``root``.
    """

    n_vertices: int
    tail: tuple[int, ...]
    sigma: tuple[int, ...]
    root: int
    origin: int | None = None

    @property
    def n_darts(self) -> int:
        return len(self.tail)

    @property
    def n_edges(self) -> int:
        return len(self.tail) // 2

    def head(self, h: int) -> int:
        return self.tail[h ^ 1]

    def next_corner(self, h: int) -> int:
        """Corner following corner h around its face."""
        return self.sigma[h] ^ 1

    @cached_property
    def sigma_inv(self) -> tuple[int, ...]:
        inv = [0] * len(self.sigma)
        for h, s in enumerate(self.sigma):
            inv[s] = h
        return tuple(inv)

    def prev_corner(self, h: int) -> int:
        return self.sigma_inv[h ^ 1]

    @cached_property
    def faces(self) -> tuple[tuple[int, ...], ...]:
        seen = [False] * self.n_darts
        out = []
        for h0 in range(self.n_darts):
            if seen[h0]:
                continue
            face = []
            h = h0
            while not seen[h]:
                seen[h] = True
                face.append(h)
                h = self.next_corner(h)
            out.append(tuple(face))
        return tuple(out)

    @cached_property
    def external_face(self) -> tuple[int, ...]:
        for f in self.faces:
            if self.root in f:
                return f
        raise AssertionError("root dart lies on no face")

    def boundary_walk(self) -> list[int]:
        """Boundary corners from the root, in the direction of the root dart."""
        walk = [self.root]
        h = self.prev_corner(self.root)
        while h != self.root:
            walk.append(h)
            h = self.prev_corner(h)
        return walk

    @property
    def perimeter(self) -> int:
        return len(self.external_face)

    @property
    def area(self) -> int:
        return len(self.faces) - 1

    def neighbours(self, v: int) -> list[int]:
        return [self.head(h) for h in self.darts_at(v)]

    @cached_property
    def _first_dart(self) -> tuple[int, ...]:
        first = [-1] * self.n_vertices
        for h, v in enumerate(self.tail):
            if first[v] < 0:
                first[v] = h
        return tuple(first)

    def darts_at(self, v: int) -> list[int]:
        h0 = self._first_dart[v]
        if h0 < 0:
            return []
        out = [h0]
        h = self.sigma[h0]
        while h != h0:
            out.append(h)
            h = self.sigma[h]
        return out

    def canonical_form(self) -> tuple:
        """Relabel darts in breadth-first order from the root; equal forms mean isomorphic rooted maps."""
        order = {self.root: 0}
        queue = deque([self.root])
        while queue:
            h = queue.popleft()
            for nb in (self.sigma[h], h ^ 1):
                if nb not in order:
                    order[nb] = len(order)
                    queue.append(nb)
        inv = sorted(order, key=order.get)
        sig = tuple(order[self.sigma[h]] for h in inv)
        alp = tuple(order[h ^ 1] for h in inv)
        origin_dart = None
        if self.origin is not None:
            origin_dart = min(order[h] for h in self.darts_at(self.origin))
        return (sig, alp, origin_dart)


# ---------------------------------------------------------------------------
# validation


def validate(obj) -> list[str]:
    """Violations of the invariants of a tree, code or map; empty when valid."""
    if isinstance(obj, WellLabeledTree):
        return _validate_tree(obj)
    if isinstance(obj, BoundaryCode):
        return _validate_code(obj)
    if isinstance(obj, QuadMap):
        return _validate_map(obj)
    return [f"unsupported object {type(obj).__name__}"]


def _validate_tree(t: WellLabeledTree, floor: int = 1) -> list[str]:
    out = []
    stack = [t]
    while stack:
        u = stack.pop()
        if u.label < floor:
            out.append(f"label {u.label} below {floor}")
        for c in u.children:
            if abs(c.label - u.label) > 1:
                out.append(f"adjacent labels {u.label} and {c.label} differ by more than 1")
            stack.append(c)
    return out


def _validate_code(c: BoundaryCode) -> list[str]:
    out = []
    if c.base < 0:
        out.append("base must be non-negative")
    if len(c.steps) == 0 or len(c.steps) % 2:
        out.append("path length must be positive and even")
    if any(s not in (1, -1) for s in c.steps):
        out.append("steps must be +1 or -1")
    h = c.heights
    if min(h) < 0:
        out.append("path goes below zero")
    if h[-1] != 0:
        out.append("path does not return to zero")
    desc = c.descents()
    if len(desc) != len(c.trees):
        out.append(f"{len(desc)} descents but {len(c.trees)} trees")
        return out
    for i, t in zip(desc, c.trees):
        if t.label != h[i] + c.base:
            out.append(f"tree at step {i} has root label {t.label}, expected {h[i] + c.base}")
        out.extend(_validate_tree(t))
    if c.base >= 1 and c.trees:
        m = min(min(t.labels()) for t in c.trees)
        if m != 1:
            out.append(f"minimum tree label is {m}, expected 1")
    return out


def _validate_map(m: QuadMap) -> list[str]:
    out = []
    if len(m.tail) != len(m.sigma) or len(m.tail) % 2:
        return ["dart arrays are inconsistent"]
    if sorted(m.sigma) != list(range(m.n_darts)):
        return ["sigma is not a permutation"]
    if any(m.tail[m.sigma[h]] != m.tail[h] for h in range(m.n_darts)):
        out.append("sigma does not preserve vertices")
    if len({v for v in m.tail}) != m.n_vertices:
        out.append("isolated or missing vertices")
    dist = bfs(m, m.tail[0])
    if any(d is None for d in dist):
        out.append("map is not connected")
        return out
    V, E, F = m.n_vertices, m.n_edges, len(m.faces)
    if V - E + F != 2:
        out.append(f"Euler characteristic {V - E + F} != 2")
    ext = m.external_face
    if len(ext) % 2:
        out.append("external face has odd degree")
    for f in m.faces:
        if f is not ext and len(f) != 4:
            out.append(f"inner face of degree {len(f)}")
    if any((dist[m.tail[h]] - dist[m.head(h)]) % 2 == 0 for h in range(m.n_darts)):
        out.append("map is not bipartite")
    return out


def bfs(m: QuadMap, source: int) -> list[int | None]:
    """Graph distances from source in the 1-skeleton."""
    dist: list[int | None] = [None] * m.n_vertices
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for u in m.neighbours(v):
            if dist[u] is None:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


# ---------------------------------------------------------------------------
# decode: close the labelled mobile


@dataclass
class _Mobile:
    tail: list[int]
    sigma: list[int]
    label: list[int | None]
    x_darts: list[int]  # darts X -> r_i, in path order of the descents


def _build_mobile(code: BoundaryCode) -> _Mobile:
    tail: list[int] = []
    label: list[int | None] = [None]  # vertex 0 is the face vertex X
    rot: list[list[int]] = [[]]

    def new_edge(u: int, v: int) -> tuple[int, int]:
        a = len(tail)
        tail.extend([u, v])
        return a, a + 1

    def attach(parent: int, tree: WellLabeledTree) -> None:
        v = len(label)
        label.append(tree.label)
        rot.append([])
        a, b = new_edge(parent, v)
        rot[parent].append(a)
        rot[v].append(b)
        for c in tree.children:
            attach(v, c)

    x_darts = []
    for t in code.trees:
        x_darts.append(len(tail))
        attach(0, t)
    sigma = [0] * len(tail)
    for darts in rot:
        for i, h in enumerate(darts):
            sigma[h] = darts[(i + 1) % len(darts)]
    return _Mobile(tail, sigma, label, x_darts)


def decode(code: BoundaryCode, with_labels: bool = False):
    """Build the pointed quadrangulation coded by ``code``.

    Every labelled corner of the mobile is joined to the next corner (in
    contour order) carrying the label one smaller, or to the origin when its
    label is 1. The mobile's own edges are then discarded.
    """
    problems = validate(code)
    if problems:
        raise ValueError("invalid code: " + "; ".join(problems))
    mob = _build_mobile(code)
    tailT, sigmaT, lab = mob.tail, mob.sigma, mob.label
    n_mob_vertices = len(lab)

    # contour of the mobile: corner h is followed by corner sigmaT[h] ^ 1
    start = mob.x_darts[0]
    contour = []
    h = start
    while True:
        if tailT[h] != 0:
            contour.append(h)
        h = sigmaT[h] ^ 1
        if h == start:
            break
    M = len(contour)
    clabel = [lab[tailT[h]] for h in contour]

    # successor of each corner: next corner cyclically with label one smaller
    succ = [-1] * M
    nxt: dict[int, int] = {}
    for t in range(2 * M - 1, -1, -1):
        ell = clabel[t % M]
        if t < M:
            succ[t] = nxt.get(ell - 1, -1) if ell > 1 else -1
        nxt[ell] = t
    for t in range(M):
        if clabel[t] > 1 and succ[t] < 0:
            raise AssertionError("corner without successor")

    # map vertices: origin is 0, mobile vertex v (>= 1) keeps index v
    origin = 0
    out_dart = [0] * M
    map_tail: list[int] = []
    incoming: dict[int, list[tuple[int, int]]] = {}  # target corner index -> (distance back, dart)
    into_origin: list[tuple[int, int]] = []
    for t in range(M):
        a = len(map_tail)
        v = tailT[contour[t]]
        out_dart[t] = a
        if clabel[t] == 1:
            map_tail.extend([v, origin])
            into_origin.append((t, a + 1))
        else:
            s = succ[t] % M
            map_tail.extend([v, tailT[contour[s]]])
            incoming.setdefault(s, []).append(((s - t) % M, a + 1))

    corner_index = {h: t for t, h in enumerate(contour)}
    map_sigma = [0] * len(map_tail)
    for v in range(1, n_mob_vertices):
        h0 = next(h for h in range(len(tailT)) if tailT[h] == v)
        rotation = []
        h = h0
        while True:
            t = corner_index[h]
            rotation.extend(d for _, d in sorted(incoming.get(t, [])))
            rotation.append(out_dart[t])
            h = sigmaT[h]
            if h == h0:
                break
        for i, d in enumerate(rotation):
            map_sigma[d] = rotation[(i + 1) % len(rotation)]
    # around the origin: reverse contour order
    rotation = [d for _, d in sorted(into_origin, reverse=True)]
    for i, d in enumerate(rotation):
        map_sigma[d] = rotation[(i + 1) % len(rotation)]

    # root: the boundary corner at position 0 of the path
    before_x = next(h for h in range(len(sigmaT)) if sigmaT[h] == mob.x_darts[0] ^ 1)
    e = out_dart[corner_index[before_x]]
    qm = QuadMap(n_mob_vertices, tuple(map_tail), tuple(map_sigma), 0, origin)
    first_descent = code.descents()[0]
    for _ in range(first_descent):
        e = qm.next_corner(e)
    qm = QuadMap(n_mob_vertices, tuple(map_tail), tuple(map_sigma), e, origin)
    if with_labels:
        labels = [0] + [lab[v] for v in range(1, n_mob_vertices)]
        return qm, labels
    return qm


# ---------------------------------------------------------------------------
# encode: read the code from BFS labels


def encode(m: QuadMap) -> BoundaryCode:
    """Code of a pointed map whose root dart is a closest boundary edge, leaving the closer end."""
    if m.origin is None:
        raise ValueError("map has no origin")
    problems = validate(m)
    if problems:
        raise ValueError("invalid map: " + "; ".join(problems))
    dist = bfs(m, m.origin)
    walk = m.boundary_walk()
    seq = [dist[m.tail[h]] for h in walk]
    base = seq[0]
    if min(seq) != base or seq[1] != base + 1:
        raise ValueError("root dart is not a closest boundary edge leaving the closer end")
    steps = tuple(seq[(i + 1) % len(seq)] - seq[i] for i in range(len(seq)))
    if any(s not in (1, -1) for s in steps):
        raise AssertionError("boundary labels do not change by one")

    def descends(h: int) -> bool:
        return dist[m.head(h)] == dist[m.tail[h]] - 1

    # mobile edges of inner faces: join the two descending corners
    partner: dict[int, int] = {}
    ext = set(m.external_face)
    for f in m.faces:
        if f[0] in ext:
            continue
        ds = [h for h in f if descends(h)]
        if len(ds) != 2:
            raise AssertionError("inner face without exactly two descending corners")
        partner[ds[0]], partner[ds[1]] = ds[1], ds[0]

    def grow(anchor: int) -> WellLabeledTree:
        v = m.tail[anchor]
        children = []
        h = m.sigma[anchor]
        while h != anchor:
            if descends(h) and h in partner:
                children.append(grow(partner[h]))
            h = m.sigma[h]
        return WellLabeledTree(dist[v], tuple(children))

    trees = tuple(grow(walk[i]) for i, s in enumerate(steps) if s == -1)
    return BoundaryCode(base, steps, trees)


# ---------------------------------------------------------------------------
# enumeration


def plane_trees(edges: int) -> Iterator[tuple]:
    """All plane trees with the given number of edges, as nested tuples of children."""
    if edges == 0:
        yield ()
        return
    for k in range(edges):
        for first in plane_trees(k):
            for rest in plane_trees(edges - 1 - k):
                yield (first,) + rest


def _tree_edges(shape: tuple) -> int:
    return sum(1 + _tree_edges(c) for c in shape)


def labelled(shape: tuple, root: int) -> Iterator[WellLabeledTree]:
    """All labellings of a shape with the given root label, increments in {-1, 0, 1}."""
    if not shape:
        yield WellLabeledTree(root)
        return
    options = []
    for child in shape:
        options.append([t for inc in (-1, 0, 1) for t in labelled(child, root + inc)])
    for combo in product(*options):
        yield WellLabeledTree(root, tuple(combo))


def dyck_paths(p: int) -> Iterator[tuple[int, ...]]:
    def rec(prefix, height, ups):
        if len(prefix) == 2 * p:
            yield tuple(prefix)
            return
        if ups < p:
            yield from rec(prefix + [1], height + 1, ups + 1)
        if height > 0:
            yield from rec(prefix + [-1], height - 1, ups)
    yield from rec([], 0, 0)


def compositions(n: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (n,)
        return
    for k in range(n + 1):
        for rest in compositions(n - k, parts - 1):
            yield (k,) + rest


ENUMERATION_LIMIT = 2_000_000


def enumerate_codes(n: int, p: int, limit: int = ENUMERATION_LIMIT) -> Iterator[BoundaryCode]:
    """Every code of area n and half-perimeter p exactly once.

    A choice of Dyck path, forest shape and label increments fixes the
    labels up to a shift; the base is the unique shift that makes the
    minimum tree label 1 (or puts the origin on the boundary).
    """
    from .genfun import CountFamily, CountQuery, closed_count

    if p < 1 or n < 0:
        raise ValueError("need n >= 0 and p >= 1")
    if closed_count(CountQuery(CountFamily.W, n, p)) > limit:
        raise ValueError(f"exhaustive enumeration at (n, p) = ({n}, {p}) exceeds the scale guard")
    for steps in dyck_paths(p):
        h = 0
        roots = []
        for s in steps:
            if s == -1:
                roots.append(h)
            h += s
        for sizes in compositions(n, p):
            shape_lists = [list(plane_trees(k)) for k in sizes]
            for shapes in product(*shape_lists):
                label_lists = [list(labelled(sh, r)) for sh, r in zip(shapes, roots)]
                for trees in product(*label_lists):
                    m = min(min(t.labels()) for t in trees)
                    base = 1 - m
                    yield BoundaryCode(base, steps, tuple(t.shifted(base) for t in trees))
