import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridvlc.flow import DisconnectedError, layered_min_cut, max_flow_min_cut, min_weight_cut
from oracles import brute_min_cut


def test_series_bottleneck():
    edges = [("S", "m"), ("m", "u")]
    cut, value = min_weight_cut(edges, "S", "u", {("S", "m"): 0.3, ("m", "u"): 0.7})
    assert cut == [("S", "m")] and value == pytest.approx(0.3)


def test_two_parallel_paths():
    edges = [("S", 1), (1, "u"), ("S", 2), (2, "u")]
    w = {("S", 1): 0.4, (1, "u"): 1.0, ("S", 2): 0.4, (2, "u"): 1.0}
    cut, value = min_weight_cut(edges, "S", "u", w)
    assert sorted(cut, key=str) == [("S", 1), ("S", 2)]
    assert value == pytest.approx(0.8)


def test_disconnected():
    with pytest.raises(DisconnectedError):
        min_weight_cut([("S", "m"), ("m", "u")], "S", "u", {("S", "m"): 0.0, ("m", "u"): 1.0})
    with pytest.raises(DisconnectedError):
        min_weight_cut([("S", "m")], "S", "u", {("S", "m"): 1.0})


def random_graph(rng, n_nodes, p):
    nodes = ["S", "T"] + list(range(n_nodes - 2))
    edges, caps = [], []
    for a in nodes:
        for b in nodes:
            if a != b and a != "T" and b != "S" and rng.random() < p:
                edges.append((a, b))
                caps.append(float(rng.uniform(0.0, 1.0)))
    return edges, caps


@pytest.mark.parametrize("seed", range(60))
def test_random_graphs_against_enumeration(seed):
    rng = np.random.default_rng(seed)
    edges, caps = random_graph(rng, int(rng.integers(3, 11)), 0.35)
    value, cut = max_flow_min_cut(dict(zip(edges, caps)), "S", "T")
    want = brute_min_cut(edges, caps, "S", "T")
    assert value == pytest.approx(want, abs=1e-12)
    cap = dict(zip(edges, caps))
    assert sum(cap[e] for e in cut) == pytest.approx(want, abs=1e-12)
    # removing the cut disconnects T
    g = nx.DiGraph([e for e in edges if e not in cut and cap[e] > 0])
    assert not (g.has_node("S") and g.has_node("T") and nx.has_path(g, "S", "T"))


@pytest.mark.parametrize("seed", range(30))
def test_random_graphs_against_networkx(seed):
    rng = np.random.default_rng(1000 + seed)
    edges, caps = random_graph(rng, 10, 0.4)
    g = nx.DiGraph()
    g.add_nodes_from(["S", "T"])
    for e, c in zip(edges, caps):
        g.add_edge(*e, capacity=c)
    want, _ = nx.minimum_cut(g, "S", "T")
    value, _ = max_flow_min_cut(dict(zip(edges, caps)), "S", "T")
    assert value == pytest.approx(want, abs=1e-12)


caps = st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0]) | st.floats(0.0, 1.0), min_size=1, max_size=8)


@given(caps, caps)
def test_layered_cut_matches_general_solver(a, b):
    n = min(len(a), len(b))
    src, usr = np.array(a[:n]), np.array(b[:n])
    value, s_in, u_in = layered_min_cut(src, usr)
    graph = {}
    for m in range(n):
        graph[("S", m)] = src[m]
        graph[(m, "u")] = usr[m]
    ref_value, ref_cut = max_flow_min_cut(graph, "S", "u", eps=0.0)
    assert value == pytest.approx(ref_value, abs=1e-12)
    mine = {("S", m) for m in np.flatnonzero(s_in)} | {(m, "u") for m in np.flatnonzero(u_in)}
    assert mine == set(ref_cut)
    edges = list(graph)
    assert value == pytest.approx(brute_min_cut(edges, [graph[e] for e in edges], "S", "u"), abs=1e-12)
