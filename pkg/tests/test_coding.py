import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadboundary.coding import (BoundaryCode, QuadMap, WellLabeledTree, bfs, decode, encode,
                                 enumerate_codes, validate)
from quadboundary.genfun import CountFamily, CountQuery, closed_count
from quadboundary.sampler import sample_code_free

T = WellLabeledTree


def test_validate_trees():
    assert validate(T(1)) == []
    assert validate(T(1, (T(3),)))
    assert validate(T(0))
    assert validate(T(2, (T(1), T(3, (T(2),))))) == []


def test_validate_codes():
    assert validate(BoundaryCode(0, (1, -1), (T(1),))) == []
    # heights must stay non-negative
    assert validate(BoundaryCode(0, (-1, 1), (T(1),)))
    # one tree per descent
    assert validate(BoundaryCode(0, (1, -1), ()))
    # root label must equal descent height plus base
    assert validate(BoundaryCode(0, (1, -1), (T(2),)))


def test_smallest_map():
    code = BoundaryCode(0, (1, -1), (T(1),))
    m = decode(code)
    assert validate(m) == []
    assert (m.area, m.perimeter, m.n_edges, m.n_vertices) == (0, 2, 1, 2)
    assert encode(m) == code


def test_invalid_code_rejected():
    with pytest.raises(ValueError):
        decode(BoundaryCode(0, (1, -1), (T(3),)))


def test_single_quadrangle():
    codes = list(enumerate_codes(1, 2))
    assert len(codes) == closed_count(CountQuery(CountFamily.W, 1, 2)) == 12
    for c in codes:
        assert c.n == 1 and len(c.steps) == 4
        m = decode(c)
        assert (m.area, m.perimeter) == (1, 4)
        assert encode(m) == c


def test_tree_map_profile():
    # with no inner faces the heights follow the contour distances of a plane tree
    for c in enumerate_codes(0, 3):
        m, labels = decode(c, with_labels=True)
        assert m.area == 0 and m.n_vertices == 4
        dist = bfs(m, m.origin)
        walk = [dist[m.tail[h]] for h in m.boundary_walk()]
        assert min(walk) == c.base


@pytest.mark.parametrize("n,p", [(0, 1), (1, 1), (0, 2), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1), (2, 3), (3, 2)])
def test_exhaustive_bijection(n, p):
    codes = list(enumerate_codes(n, p))
    assert len(codes) == len(set(codes)) == closed_count(CountQuery(CountFamily.W, n, p))
    forms = set()
    base0 = 0
    for c in codes:
        m, labels = decode(c, with_labels=True)
        assert validate(m) == []
        assert (m.area, m.perimeter) == (n, 2 * p)
        assert bfs(m, m.origin) == labels
        assert encode(m) == c
        forms.add(m.canonical_form())
        base0 += c.base == 0
    assert len(forms) == len(codes)
    assert base0 == closed_count(CountQuery(CountFamily.W0, n, p))


def test_base_is_boundary_distance():
    for c in enumerate_codes(2, 2):
        m = decode(c)
        dist = bfs(m, m.origin)
        boundary = {m.tail[h] for h in m.external_face}
        assert min(dist[v] for v in boundary) == c.base == min(h + c.base for h in c.heights)


def test_code_json_roundtrip():
    c = BoundaryCode(0, (1, 1, -1, -1), (T(2, (T(1),)), T(1)))
    assert validate(c) == []
    text = c.to_json()
    assert json.loads(text)["steps"] == [1, 1, -1, -1]
    assert BoundaryCode.from_json(text) == c


def test_enumeration_scale_guard():
    with pytest.raises(ValueError):
        next(enumerate_codes(40, 20))


@settings(max_examples=30)
@given(st.integers(0, 40), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_sampled_codes_roundtrip(n, p, seed):
    code = sample_code_free(n, p, np.random.default_rng(seed))
    assert validate(code) == []
    assert (code.n, code.p) == (n, p)
    m, labels = decode(code, with_labels=True)
    assert validate(m) == []
    assert (m.area, m.perimeter) == (n, 2 * p)
    assert bfs(m, m.origin) == labels
    assert encode(m) == code


@settings(max_examples=30)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_relabelled_map_same_code(p, seed):
    # permuting vertex and edge names must not change the code
    code = sample_code_free(6, p, np.random.default_rng(seed))
    m = decode(code)
    rng = np.random.default_rng(seed + 1)
    vperm = rng.permutation(m.n_vertices)
    eperm = rng.permutation(m.n_edges)
    flip = rng.integers(0, 2, m.n_edges)
    dmap = [2 * eperm[h >> 1] + ((h & 1) ^ flip[h >> 1]) for h in range(m.n_darts)]
    tail = [0] * m.n_darts
    sigma = [0] * m.n_darts
    for h in range(m.n_darts):
        tail[dmap[h]] = int(vperm[m.tail[h]])
        sigma[dmap[h]] = dmap[m.sigma[h]]
    m2 = QuadMap(m.n_vertices, tuple(tail), tuple(sigma), dmap[m.root], int(vperm[m.origin]))
    assert validate(m2) == []
    assert encode(m2) == code
