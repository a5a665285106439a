"""Exact uniform sampling of boundary codes and Monte Carlo distance laws.

Two exact samplers are provided.

``dp``
    Inverse sampling against big-integer count tables (trees with labels
    >= 1, then Dyck paths carrying trees). Each base class is sampled
    directly by tracking whether a label 1 has been seen yet. Intended
    for desk-scale areas.

``free``
    Labels are sampled without positivity constraint and shifted
    afterwards: a uniform Dyck path, a uniform forest of plane trees (both
    by the cycle lemma) and independent label increments in {-1, 0, 1}
    give a uniform code, whose base is 1 minus the smallest tree label.
    Runs in O(n) per sample under numba and is used for large areas.

The pointed measure (each pointed map weighted by its inverse symmetry
factor) is obtained from uniform codes by accepting a code with probability
1/k, k being the number of closest boundary edges it could have been opened
at.

Random streams: the samples are cut into chunks of ``chunk_size``; chunk i
draws from child i of ``numpy.random.SeedSequence(seed)``. The output depends
only on (config, seed), whatever the number of workers.
"""

from __future__ import annotations

import enum
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numba import njit
from scipy import stats

from .coding import BoundaryCode, WellLabeledTree
from .genfun import CountFamily, CountQuery, FixedNP, FixedZ, Statistic, closed_count, closed_R_power

DP_AREA_LIMIT = 300


class Measure(str, enum.Enum):
    rooted = "rooted"
    pointed = "pointed"


class BaseCondition(str, enum.Enum):
    unconstrained = "unconstrained"
    min_label_1 = "min-label-1"


# ---------------------------------------------------------------------------
# count tables


@lru_cache(maxsize=None)
def _free_tree_count(m: int) -> int:
    """Trees with m edges and unconstrained labels: 3^m Catalan(m)."""
    return 3**m * math.comb(2 * m, m) // (m + 1)


@dataclass(frozen=True)
class TreeCountTable:
    """r[l][m]: well-labelled trees with m edges, root label l, all labels >= 1.

    Rows are stored for l <= n_max only; for l > m the positivity
    constraint cannot bind and the count is 3^m Catalan(m).
    """

    l_max: int
    n_max: int
    rows: tuple[tuple[int, ...], ...]

    def count(self, ell: int, m: int) -> int:
        if ell < 1 or m < 0:
            return 0
        if m > self.n_max:
            raise ValueError(f"tree table built for m <= {self.n_max}")
        if ell > m:
            return _free_tree_count(m)
        return self.rows[ell][m]

    def touching(self, ell: int, m: int) -> int:
        """Trees that also carry the label 1 somewhere."""
        return self.count(ell, m) - self.count(ell - 1, m)

    def row(self, ell: int, size: int | None = None) -> list[int]:
        size = self.n_max if size is None else size
        return [self.count(ell, m) for m in range(size + 1)]

    def __getitem__(self, key: tuple[int, int]) -> int:
        return self.count(*key)


def build_tree_table(l_max: int, n_max: int) -> TreeCountTable:
    """Root-and-first-child recursion with child labels in {l-1, l, l+1} and labels >= 1."""
    if l_max < 1 or n_max < 0:
        raise ValueError("need l_max >= 1 and n_max >= 0")
    rows = [[0] * (n_max + 1) for _ in range(n_max + 1)]

    def get(ell, m):
        if ell < 1:
            return 0
        if ell > m:
            return _free_tree_count(m)
        return rows[ell][m]

    for m in range(n_max + 1):
        for ell in range(1, m + 1):
            if m == 0:
                continue
            total = 0
            for child in (ell - 1, ell, ell + 1):
                if child < 1:
                    continue
                for a in range(m):
                    ca = get(child, a)
                    if ca:
                        total += ca * get(ell, m - 1 - a)
            rows[ell][m] = total
    return TreeCountTable(l_max, n_max, tuple(tuple(r) for r in rows))


def sample_tree(table: TreeCountTable, m: int, ell: int, rng: random.Random,
                touching: bool = False) -> WellLabeledTree:
    """Uniform tree with m edges and root label ell (labels >= 1).

    With ``touching=True`` the tree is uniform among those reaching label 1.
    """
    total = table.touching(ell, m) if touching else table.count(ell, m)
    if total == 0:
        raise ValueError(f"no tree with {m} edges and root label {ell}{' reaching 1' if touching else ''}")
    if not touching:
        return _sample_free_tree(table, m, ell, rng)
    if ell == 1:
        return _sample_free_tree(table, m, 1, rng)
    children = []
    while True:
        # the tree is (first child subtree) + (root with the remaining children)
        u = rng.randrange(table.touching(ell, m))
        chosen = None
        for child in (ell - 1, ell, ell + 1):
            for a in range(m):
                b = m - 1 - a
                w_child = table.touching(child, a) * table.count(ell, b)
                if u < w_child:
                    chosen = (child, a, True)
                    break
                u -= w_child
                w_rest = table.count(child - 1, a) * table.touching(ell, b)
                if u < w_rest:
                    chosen = (child, a, False)
                    break
                u -= w_rest
            if chosen:
                break
        child, a, child_touches = chosen
        if child_touches:
            children.append(sample_tree(table, a, child, rng, touching=True))
            rest = _sample_free_tree(table, m - 1 - a, ell, rng)
            children.extend(rest.children)
            return WellLabeledTree(ell, tuple(children))
        children.append(_sample_free_tree(table, a, child - 1, rng).shifted(1))
        m = m - 1 - a


def _sample_free_tree(table: TreeCountTable, m: int, ell: int, rng: random.Random) -> WellLabeledTree:
    children = []
    while m > 0:
        u = rng.randrange(table.count(ell, m))
        chosen = None
        for child in (ell - 1, ell, ell + 1):
            for a in range(m):
                w = table.count(child, a) * table.count(ell, m - 1 - a)
                if u < w:
                    chosen = (child, a)
                    break
                u -= w
            if chosen:
                break
        child, a = chosen
        children.append(_sample_free_tree(table, a, child, rng))
        m = m - 1 - a
    return WellLabeledTree(ell, tuple(children))


@dataclass(frozen=True)
class PathCountTable:
    """Completion counts for Dyck paths carrying trees, at fixed (n, p, base).

    ``N[f][i][h][m]`` counts completions from step i at height h with m tree
    edges still to place; f = 1 once a label 1 has been seen, and a
    completion from f = 0 must still reach label 1.
    """

    n: int
    p: int
    base: int
    N: tuple

    def total(self) -> int:
        return self.N[0][0][0][self.n]

    def total_labels_ge1(self) -> int:
        return self.N[1][0][0][self.n]


def _conv(a: Sequence[int], b: Sequence[int], size: int) -> list[int]:
    out = [0] * (size + 1)
    for i, ai in enumerate(a[: size + 1]):
        if ai:
            for j in range(size + 1 - i):
                bj = b[j]
                if bj:
                    out[i + j] += ai * bj
    return out


def build_path_table(trees: TreeCountTable, n: int, p: int, base: int) -> PathCountTable:
    if n > trees.n_max:
        raise ValueError("tree table too small")
    if p < 1 or base < 0:
        raise ValueError("need p >= 1 and base >= 0")
    zero = [0] * (n + 1)
    steps = 2 * p
    N = [[[zero for _ in range(p + 2)] for _ in range(steps + 1)] for _ in range(2)]
    N[1][steps][0] = [1] + [0] * n
    for i in range(steps - 1, -1, -1):
        for h in range(0, min(i, steps - i) + 1):
            if (i - h) % 2:
                continue
            up1 = N[1][i + 1][h + 1] if h + 1 <= p else zero
            up0 = N[0][i + 1][h + 1] if h + 1 <= p else zero
            row1 = list(up1)
            row0 = list(up0)
            if h >= 1:
                ell = h + base
                free = trees.row(ell, n)
                touch = [trees.touching(ell, m) for m in range(n + 1)]
                nontouch = [f - t for f, t in zip(free, touch)]
                down1 = N[1][i + 1][h - 1]
                down0 = N[0][i + 1][h - 1]
                for k, v in enumerate(_conv(free, down1, n)):
                    row1[k] += v
                for k, v in enumerate(_conv(touch, down1, n)):
                    row0[k] += v
                for k, v in enumerate(_conv(nontouch, down0, n)):
                    row0[k] += v
            N[1][i][h] = row1
            N[0][i][h] = row0
    return PathCountTable(n, p, base, tuple(tuple(tuple(tuple(r) for r in col) for col in f) for f in N))


def sample_code_dp(trees: TreeCountTable, table: PathCountTable, rng: random.Random) -> BoundaryCode:
    """Uniform code with the table's (n, p) and base exactly."""
    n, p, base = table.n, table.p, table.base
    N = table.N
    if N[0][0][0][n] == 0:
        raise ValueError(f"no code with (n, p, base) = ({n}, {p}, {base})")
    flag, h, rem = 0, 0, n
    steps = []
    forest = []
    for i in range(2 * p):
        u = rng.randrange(N[flag][i][h][rem])
        w_up = N[flag][i + 1][h + 1][rem] if h + 1 <= p else 0
        if u < w_up:
            steps.append(1)
            h += 1
            continue
        u -= w_up
        ell = h + base
        chosen = None
        for a in range(rem + 1):
            if flag:
                w = trees.count(ell, a) * N[1][i + 1][h - 1][rem - a]
                if u < w:
                    chosen = (a, 1, False)
                    break
                u -= w
            else:
                w = trees.touching(ell, a) * N[1][i + 1][h - 1][rem - a]
                if u < w:
                    chosen = (a, 1, True)
                    break
                u -= w
                w = (trees.count(ell, a) - trees.touching(ell, a)) * N[0][i + 1][h - 1][rem - a]
                if u < w:
                    chosen = (a, 0, False)
                    break
                u -= w
        a, new_flag, must_touch = chosen
        if flag:
            tree = sample_tree(trees, a, ell, rng)
        elif must_touch:
            tree = sample_tree(trees, a, ell, rng, touching=True)
        else:
            # labels >= 2: a shifted tree with labels >= 1
            tree = sample_tree(trees, a, ell - 1, rng).shifted(1)
        forest.append(tree)
        steps.append(-1)
        flag, h, rem = new_flag, h - 1, rem - a
    return BoundaryCode(base, tuple(steps), tuple(forest))


@dataclass
class DPSampler:
    """Tables for every base at one (n, p)."""

    n: int
    p: int
    trees: TreeCountTable
    tables: dict[int, PathCountTable]

    @classmethod
    def build(cls, n: int, p: int, trees: TreeCountTable | None = None) -> "DPSampler":
        if n > DP_AREA_LIMIT:
            raise ValueError(f"dp sampler is limited to n <= {DP_AREA_LIMIT}")
        trees = trees if trees is not None and trees.n_max >= n else build_tree_table(n + p + 1, n)
        tables = {b: build_path_table(trees, n, p, b) for b in range(0, n + 2)}
        return cls(n, p, trees, tables)

    def base_counts(self) -> dict[int, int]:
        return {b: t.total() for b, t in self.tables.items()}

    def sample(self, rng: random.Random, base: int | None = None) -> BoundaryCode:
        if base is None:
            counts = self.base_counts()
            u = rng.randrange(sum(counts.values()))
            for b, c in counts.items():
                if u < c:
                    base = b
                    break
                u -= c
        if base not in self.tables:
            raise ValueError(f"no code with base {base} at (n, p) = ({self.n}, {self.p})")
        return sample_code_dp(self.trees, self.tables[base], rng)


# ---------------------------------------------------------------------------
# free-label sampler


def _cycle_lemma_start(steps: Sequence[int], choice: int, parts: int) -> int:
    """Start of the rotation that splits a walk of sum -parts into parts first passages."""
    s = 0
    low = 0
    first_hit = {0: 0}
    for i, x in enumerate(steps[:-1], start=1):
        s += x
        if s < low:
            low = s
            first_hit[s] = i
    s += steps[-1]
    # the walk's minimum over start positions 0..L-1 is low
    return first_hit[low + choice] if parts > 0 else 0


def sample_code_free(n: int, p: int, rng: np.random.Generator) -> BoundaryCode:
    """Uniform code at (n, p) by the free-label construction (pure Python)."""
    seq = [1] * p + [-1] * (p + 1)
    rng.shuffle(seq)
    start = _cycle_lemma_start(seq, 0, 1)
    dyck = (seq[start:] + seq[:start])[: 2 * p]
    heights = [0]
    for s in dyck:
        heights.append(heights[-1] + s)
    roots = [heights[i] for i, s in enumerate(dyck) if s == -1]

    walk = [1] * n + [-1] * (n + p)
    rng.shuffle(walk)
    start = _cycle_lemma_start(walk, int(rng.integers(0, p)), p)
    walk = walk[start:] + walk[:start]
    increments = iter(rng.integers(-1, 2, size=n).tolist())

    trees = []
    pos = 0
    for r in roots:
        # one tree: a Dyck excursion in the walk followed by a down step
        stack = [[r, []]]
        while True:
            s = walk[pos]
            pos += 1
            if s == 1:
                node = [stack[-1][0] + next(increments), []]
                stack[-1][1].append(node)
                stack.append(node)
            elif len(stack) == 1:
                break
            else:
                stack.pop()
        trees.append(_freeze(stack[0]))
    low = min(min(t.labels()) for t in trees)
    base = 1 - low
    return BoundaryCode(base, tuple(dyck), tuple(t.shifted(base) for t in trees))


def _freeze(node) -> WellLabeledTree:
    return WellLabeledTree(node[0], tuple(_freeze(c) for c in node[1]))


_MASK32 = (1 << 32) - 1


@njit(cache=True)
def _below(s):
    """Exactly uniform integer in [0, s) for 0 < s < 2^31 (multiply-shift with rejection)."""
    m = np.random.randint(0, 1 << 32) * s
    low = m & _MASK32
    if low < s:
        threshold = ((1 << 32) - s) % s
        while low < threshold:
            m = np.random.randint(0, 1 << 32) * s
            low = m & _MASK32
    return m >> 32


@njit(cache=True)
def _shuffle_signs(buf, n_up, n_down):
    """Uniform arrangement of n_up (+1) and n_down (-1) steps (Fisher-Yates)."""
    total = n_up + n_down
    for i in range(total):
        buf[i] = 1 if i < n_up else -1
    for i in range(total - 1, 0, -1):
        j = _below(i + 1)
        t = buf[i]
        buf[i] = buf[j]
        buf[j] = t


@njit(cache=True)
def _free_chunk(seed, n, ps, pointed, boundary):
    """Distances for a chunk of samples; ps holds the half-perimeter of each."""
    np.random.seed(seed)
    count = ps.shape[0]
    out = np.empty(count, dtype=np.int64)
    pmax = 1
    for i in range(count):
        if ps[i] > pmax:
            pmax = ps[i]
    seq = np.empty(2 * pmax + 1, dtype=np.int64)
    heights = np.empty(2 * pmax + 1, dtype=np.int64)
    roots = np.empty(pmax, dtype=np.int64)
    walk = np.empty(2 * n + pmax, dtype=np.int64)
    first_hit = np.empty(2 * n + pmax + 1, dtype=np.int64)
    stack = np.empty(n + 1, dtype=np.int64)
    bits = 0
    nbits = 0
    for t in range(count):
        p = ps[t]
        while True:
            # Dyck path: rotate p ups and p+1 downs at the first minimum
            _shuffle_signs(seq, p, p + 1)
            s = 0
            low = 0
            start = 0
            for i in range(2 * p):
                s += seq[i]
                if s < low:
                    low = s
                    start = i + 1
            h = 0
            k = 0
            nroots = 0
            for i in range(2 * p):
                heights[i] = h
                if h == 0:
                    k += 1
                st = seq[(start + i) % (2 * p + 1)]
                if st == -1:
                    roots[nroots] = h
                    nroots += 1
                h += st
            heights[2 * p] = 0
            if pointed and not boundary and k > 1:
                if _below(k) != 0:
                    continue
            # forest: n ups and n+p downs, rotated at one of p first-passage starts
            L = 2 * n + p
            _shuffle_signs(walk, n, n + p)
            s = 0
            low = 0
            first_hit[0] = 0
            for i in range(L - 1):
                s += walk[i]
                if s < low:
                    low = s
                    first_hit[-s] = i + 1
            c = _below(p)
            start = first_hit[-(low + c)]
            # labels along the contour of each tree
            m = 1 << 62
            pos = start
            for r in range(p):
                top = 0
                stack[0] = roots[r]
                if roots[r] < m:
                    m = roots[r]
                while True:
                    st = walk[pos]
                    pos += 1
                    if pos == L:
                        pos = 0
                    if st == 1:
                        # increment in {-1, 0, 1} from two random bits, rejecting 3
                        while True:
                            if nbits < 2:
                                bits = np.random.randint(0, 1 << 52)
                                nbits = 52
                            v = bits & 3
                            bits >>= 2
                            nbits -= 2
                            if v < 3:
                                break
                        lab = stack[top] + v - 1
                        top += 1
                        stack[top] = lab
                        if lab < m:
                            m = lab
                    elif top == 0:
                        break
                    else:
                        top -= 1
            base = 1 - m
            if boundary:
                if base != 0:
                    continue
                out[t] = heights[_below(2 * p)]
            else:
                out[t] = base
            break
    return out


# ---------------------------------------------------------------------------
# configuration and histograms


@dataclass(frozen=True)
class SampleConfig:
    ensemble: FixedNP | FixedZ
    samples: int
    seed: int = 0
    measure: Measure = Measure.pointed
    base_condition: BaseCondition = BaseCondition.unconstrained
    base: int | None = None
    method: str = "auto"
    chunk_size: int = 1 << 16

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure(self.measure))
        object.__setattr__(self, "base_condition", BaseCondition(self.base_condition))
        if self.samples < 0:
            raise ValueError("samples must be non-negative")
        if self.method not in ("auto", "dp", "free"):
            raise ValueError("method must be auto, dp or free")
        if self.base_condition is BaseCondition.min_label_1 and self.base is None:
            raise ValueError("min-label-1 conditioning needs a base")
        if isinstance(self.ensemble, FixedNP) and self.ensemble.p < 1:
            raise ValueError("half-perimeter p must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def n(self) -> int:
        return self.ensemble.n

    def resolved_method(self) -> str:
        if self.method != "auto":
            return self.method
        if self.base_condition is BaseCondition.min_label_1:
            return "dp"
        return "free"

    def metadata(self) -> dict:
        meta = {"ensemble": "fixed_np" if isinstance(self.ensemble, FixedNP) else "fixed_z",
                "n": self.n}
        if isinstance(self.ensemble, FixedNP):
            meta["p"] = self.ensemble.p
        else:
            meta["z"] = str(self.ensemble.z)
            meta["p_max"] = self.ensemble.cutoff()
        meta.update(samples=self.samples, seed=self.seed, measure=self.measure.value,
                    table_mode=self.resolved_method(), chunk_size=self.chunk_size,
                    rng="numpy.random.SeedSequence(seed).spawn, one child per chunk")
        return meta


def _perimeter_weight(n: int, p: int, kind: str) -> int | Fraction:
    if kind == "rooted":
        return closed_count(CountQuery(CountFamily.W, n, p))
    if kind == "pointed":
        # log W at g^n z^p: (2p-1)!/(p!)^2 times the g^n coefficient of R^p
        return Fraction(math.factorial(2 * p - 1), math.factorial(p) ** 2) * closed_R_power(n, p)
    if kind == "boundary":
        return 2 * p * closed_count(CountQuery(CountFamily.W0, n, p))
    raise ValueError(f"unknown perimeter weight {kind!r}")


@lru_cache(maxsize=16)
def perimeter_pmf(ensemble: FixedZ, kind: str = "rooted") -> tuple[np.ndarray, np.ndarray]:
    """Half-perimeters 1..p_max and their probabilities in the fixed-z ensemble.

    The weight of p is z^p times the number of objects at (n, p): codes
    (``rooted``), pointed maps with inverse symmetry factors (``pointed``), or
    maps with the origin and a second point on the boundary (``boundary``).
    """
    p_max = ensemble.cutoff()
    ps = np.arange(1, p_max + 1)
    weights = [ensemble.z**p * _perimeter_weight(ensemble.n, p, kind) for p in range(1, p_max + 1)]
    total = sum(weights)
    return ps, np.array([float(w / total) for w in weights])


def _perimeter_kind(config: "SampleConfig", statistic: Statistic) -> str:
    if statistic is Statistic.boundary_boundary:
        return "boundary"
    return config.measure.value


def _chunks(config: SampleConfig) -> list[tuple[int, np.random.SeedSequence]]:
    k = max(1, math.ceil(config.samples / config.chunk_size))
    children = np.random.SeedSequence(config.seed).spawn(k)
    sizes = [config.chunk_size] * (k - 1) + [config.samples - config.chunk_size * (k - 1)]
    return list(zip(sizes, children))


def _draw_ps(config: SampleConfig, size: int, rng: np.random.Generator, kind: str) -> np.ndarray:
    if isinstance(config.ensemble, FixedNP):
        return np.full(size, config.ensemble.p, dtype=np.int64)
    ps, probs = perimeter_pmf(config.ensemble, kind)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return ps[np.searchsorted(cdf, rng.random(size), side="right")].astype(np.int64)


def _python_rng(ss: np.random.SeedSequence) -> random.Random:
    return random.Random(int.from_bytes(ss.generate_state(8, np.uint32).tobytes(), "little"))


@lru_cache(maxsize=32)
def _dp_sampler(n: int, p: int) -> DPSampler:
    return DPSampler.build(n, p)


def _dp_distance(config: SampleConfig, sampler: DPSampler, rng: random.Random,
                 statistic: Statistic) -> int:
    while True:
        if statistic is Statistic.boundary_boundary:
            code = sampler.sample(rng, base=0)
            return code.heights[rng.randrange(2 * code.p)]
        code = sampler.sample(rng)
        if config.measure is Measure.pointed:
            k = code.minima_count()
            if k > 1 and rng.randrange(k) != 0:
                continue
        return code.base


def _run_chunk(args) -> np.ndarray:
    config, statistic, size, ss = args
    gen = np.random.default_rng(ss)
    ps = _draw_ps(config, size, gen, _perimeter_kind(config, statistic))
    method = config.resolved_method()
    if method == "free":
        seed = int(ss.generate_state(1, np.uint32)[0])
        return _free_chunk(seed, config.n, ps, config.measure is Measure.pointed,
                           statistic is Statistic.boundary_boundary)
    rng = _python_rng(ss)
    out = np.empty(size, dtype=np.int64)
    for i, p in enumerate(ps):
        out[i] = _dp_distance(config, _dp_sampler(config.n, int(p)), rng, statistic)
    return out


def sample_distances(config: SampleConfig, statistic: Statistic | str = Statistic.bulk_boundary,
                     workers: int = 1) -> np.ndarray:
    """Raw distance samples in stream order."""
    statistic = Statistic(statistic)
    if config.samples == 0:
        return np.empty(0, dtype=np.int64)
    jobs = [(config, statistic, size, ss) for size, ss in _chunks(config)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    return np.concatenate(parts)


def sample_codes(config: SampleConfig) -> list[BoundaryCode]:
    """Explicit codes (for inspection and export), uniform in the rooted measure."""
    out = []
    for size, ss in _chunks(config):
        gen = np.random.default_rng(ss)
        ps = _draw_ps(config, size, gen, "rooted")
        if config.resolved_method() == "free":
            out.extend(sample_code_free(config.n, int(p), gen) for p in ps)
        else:
            rng = _python_rng(ss)
            base = config.base if config.base_condition is BaseCondition.min_label_1 else None
            out.extend(_dp_sampler(config.n, int(p)).sample(rng, base=base) for p in ps)
    return out


@dataclass
class Histogram:
    counts: dict[int, int]
    metadata: dict = field(default_factory=dict)

    @property
    def samples(self) -> int:
        return sum(self.counts.values())

    def support(self) -> list[int]:
        return sorted(self.counts)

    def pmf(self, size: int | None = None) -> np.ndarray:
        size = (max(self.counts) + 1 if self.counts else 0) if size is None else size
        out = np.zeros(size)
        for d, c in self.counts.items():
            if d < size:
                out[d] = c
        return out / max(self.samples, 1)

    def merge(self, other: "Histogram") -> "Histogram":
        counts = dict(self.counts)
        for d, c in other.counts.items():
            counts[d] = counts.get(d, 0) + c
        meta = dict(self.metadata)
        meta["samples"] = sum(counts.values())
        return Histogram(counts, meta)

    def to_csv(self) -> str:
        total = self.samples
        lines = ["d,count,prob"]
        for d in self.support():
            lines.append(f"{d},{self.counts[d]},{self.counts[d] / total:.12f}")
        return "\n".join(lines) + "\n"

    def metadata_json(self) -> str:
        return json.dumps(self.metadata, sort_keys=True)


def distance_histogram(config: SampleConfig, statistic: Statistic | str = Statistic.bulk_boundary,
                       workers: int = 1) -> Histogram:
    statistic = Statistic(statistic)
    values = sample_distances(config, statistic, workers)
    uniq, cnt = np.unique(values, return_counts=True)
    meta = config.metadata()
    meta["statistic"] = statistic.value
    if statistic is Statistic.boundary_boundary:
        meta["measure"] = "boundary corner"
    return Histogram({int(d): int(c) for d, c in zip(uniq, cnt)}, meta)


@dataclass(frozen=True)
class CompareReport:
    ks: float
    chi2: float | None
    dof: int | None
    p_value: float | None
    samples: int

    def as_dict(self) -> dict:
        return {"ks": self.ks, "chi2": self.chi2, "dof": self.dof,
                "p_value": self.p_value, "samples": self.samples}


def ks_compare(hist: Histogram, reference: Sequence | Histogram, min_expected: float = 5.0) -> CompareReport:
    """KS sup-distance between CDFs on the integers, and a pooled chi-square when counts allow."""
    if isinstance(reference, Histogram):
        size = max(max(hist.counts, default=0), max(reference.counts, default=0)) + 1
        ref = reference.pmf(size)
        chi_ok = False
    else:
        ref = np.array([float(x) for x in reference])
        size = max(len(ref), max(hist.counts, default=0) + 1)
        ref = np.concatenate([ref, np.zeros(size - len(ref))])
        chi_ok = True
    emp = hist.pmf(size)
    ks = float(np.max(np.abs(np.cumsum(emp) - np.cumsum(ref)))) if size else 0.0
    chi2 = dof = pv = None
    total = hist.samples
    if chi_ok and total > 0:
        obs, exp = [], []
        o_acc = e_acc = 0.0
        for d in range(size):
            o_acc += emp[d] * total
            e_acc += ref[d] * total
            if e_acc >= min_expected:
                obs.append(o_acc)
                exp.append(e_acc)
                o_acc = e_acc = 0.0
        if obs:
            obs[-1] += o_acc
            exp[-1] += e_acc
        if len(obs) >= 2:
            chi2 = float(sum((o - e) ** 2 / e for o, e in zip(obs, exp)))
            dof = len(obs) - 1
            pv = float(stats.chi2.sf(chi2, dof))
    return CompareReport(ks, chi2, dof, pv, total)


def ks_continuous(values: np.ndarray, scale: float, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sup-distance between the empirical CDF of values*scale and a continuous CDF.

    Both one-sided limits of the empirical CDF are compared at every atom.
    """
    uniq, cnt = np.unique(values, return_counts=True)
    x = uniq * scale
    upper = np.cumsum(cnt) / cnt.sum()
    lower = upper - cnt / cnt.sum()
    ref = cdf(x)
    return float(max(np.max(np.abs(upper - ref)), np.max(np.abs(lower - ref))))
