import json

import pytest
from hypothesis import given, settings, strategies as st

from lpsc.graphs import (
    CodeParams,
    GraphError,
    Kind,
    TannerGraph,
    build_graph_cover,
    build_regular,
    build_spatially_coupled,
    derive_sc_from_cover,
    dumps,
    loads,
    sc_check_degree_profile,
    validate,
)


def degrees_by_position(g):
    out = {}
    for c, p in enumerate(g.check_pos):
        out.setdefault(p, set()).add(len(g.check_adj[c]))
    return [sorted(out[p]) for p in sorted(out)]


def test_regular_small():
    g = build_regular(3, 6, 6, seed=1)
    assert (g.n_vars, g.n_checks, len(g.edges)) == (6, 3, 18)
    assert all(len(a) == 3 for a in g.var_adj) and all(len(a) == 6 for a in g.check_adj)
    assert validate(g).ok


def test_regular_divisibility():
    with pytest.raises(GraphError):
        build_regular(3, 6, 7, seed=0)


def test_regular_histogram():
    g = build_regular(3, 4, 8, seed=7)
    assert (g.n_vars, g.n_checks) == (8, 6)
    assert {len(a) for a in g.var_adj} == {3} and {len(a) for a in g.check_adj} == {4}


def test_regular_deterministic():
    assert dumps(build_regular(3, 6, 30, seed=4)) == dumps(build_regular(3, 6, 30, seed=4))


def test_sc_counts():
    g = build_spatially_coupled(CodeParams(3, 2, 2, 2), seed=3)
    assert (g.n_vars, g.n_checks, len(g.edges)) == (10, 7, 30)
    assert sorted(set(g.check_pos)) == list(range(-3, 4))
    assert degrees_by_position(g) == [[2], [4], [6], [6], [6], [4], [2]]
    assert validate(g).ok
    g1 = build_spatially_coupled(CodeParams(3, 2, 1, 2), seed=0)
    assert (g1.n_vars, g1.n_checks) == (6, 5)
    assert degrees_by_position(g1) == [[2], [4], [6], [4], [2]]


def test_cover_counts():
    g = build_graph_cover(CodeParams(3, 2, 2, 2), seed=5)
    assert (g.n_vars, g.n_checks, len(g.edges)) == (10, 5, 30)
    assert {len(a) for a in g.check_adj} == {6} and {len(a) for a in g.var_adj} == {3}
    g2 = build_graph_cover(CodeParams(3, 2, 1, 4), seed=2)
    assert (g2.n_vars, g2.n_checks) == (12, 6)
    assert all(len(g2.checks_at(p)) == 2 for p in (-1, 0, 1))


def test_params_validation():
    for bad in ((4, 2, 2, 2), (3, 2, 2, 3), (1, 1, 1, 1)):
        with pytest.raises(GraphError):
            CodeParams(*bad)


def test_derived_code():
    cover = build_graph_cover(CodeParams(3, 2, 2, 2), seed=1)
    d = derive_sc_from_cover(cover, 0)
    assert len(d.special_vars) == 4 and d.graph.n_vars == 6
    assert d.graph.params.L == 1
    for i in range(-2, 3):
        d = derive_sc_from_cover(cover, i)
        assert min(len(a) for a in d.graph.check_adj) >= 2
        assert validate(d.graph).ok
        assert sorted(d.survivor_map) == sorted(set(range(10)) - set(d.special_vars))
    with pytest.raises(GraphError):
        derive_sc_from_cover(cover, 3)


def test_validate_reports_problems():
    g = build_spatially_coupled(CodeParams(3, 2, 2, 2), seed=3)
    v, c = g.edges[0]
    dup = TannerGraph(
        g.n_vars, g.n_checks,
        tuple(a + (c,) if i == v else a for i, a in enumerate(g.var_adj)),
        tuple(a + (v,) if j == c else a for j, a in enumerate(g.check_adj)),
        g.kind, g.params, g.var_pos, g.check_pos,
    )
    assert any("duplicate" in s or "parallel" in s for s in validate(dup).violations)
    r = build_regular(3, 6, 12, seed=2)
    v, c = r.edges[0]
    short = TannerGraph.from_edges(r.n_vars, r.n_checks, [e for e in r.edges if e != (v, c)], kind=Kind.REGULAR, params=r.params)
    assert any(f"check {c}" in s for s in validate(short).violations)


def test_json_roundtrip(tmp_path):
    g = build_spatially_coupled(CodeParams(3, 2, 2, 2), seed=3)
    text = dumps(g)
    d = json.loads(text)
    assert d["edges"] == sorted(d["edges"])
    assert set(d) >= {"kind", "params", "n_vars", "n_checks", "edges", "var_pos", "check_pos"}
    assert dumps(loads(text)) == text


@st.composite
def sc_params(draw):
    k = draw(st.sampled_from([1, 2, 3]))
    return CodeParams(3, k, draw(st.integers(1, 4)), k * draw(st.integers(1, 3)))


@settings(max_examples=40, deadline=None)
@given(sc_params(), st.integers(0, 2**32 - 1))
def test_sc_profile_and_handshake(p, seed):
    g = build_spatially_coupled(p, seed)
    assert validate(g).ok
    assert sum(map(len, g.var_adj)) == sum(map(len, g.check_adj))
    by_pos = [len(g.check_adj[c]) for c in sorted(range(g.n_checks), key=lambda c: (g.check_pos[c], c))]
    per = p.checks_per_position
    assert [by_pos[i * per] for i in range(len(by_pos) // per)] == sc_check_degree_profile(p)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.sampled_from([2, 4]), st.integers(0, 2**32 - 1))
def test_every_cut_is_valid(L, M, seed):
    p = CodeParams(3, 2, L, M)
    cover = build_graph_cover(p, seed)
    assert validate(cover).ok
    for i in range(-L, L + 1):
        d = derive_sc_from_cover(cover, i)
        assert validate(d.graph).ok
        assert d.graph.params.L == L - 1
