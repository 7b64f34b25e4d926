import math

import numpy as np
import pytest

from faultca import infobound as ib
from faultca import lattice as lat
from faultca.analysis import thm42_min_degree
from faultca.engine import majority_rules, tree_rules
from faultca.transition import BooleanTable
from faultca.treeify import treeify
from oracles import bsc_chain_mi, enumerate_paths


def test_chain_shape():
    c = ib.chain_circuit(5)
    assert c.layer_sizes == [1] * 5
    assert ib.count_paths(c) == 1


def test_unroll_tree_rules():
    rules = treeify(lat.build_tree(5, 3))
    c = ib.unroll_circuit(rules.tree, tree_rules(rules, 0), 0, 2)
    assert c.layer_sizes == [5, 1]
    assert all(i == ib.INPUT for g in c.layers[0] for i in g.inputs)


def test_unroll_toom_fan_in():
    L = lat.build_toom(8, 8)
    c = ib.unroll_circuit(L, majority_rules(L), 0, 3)
    assert all(g.fan_in == 3 for layer in c.layers for g in layer)
    assert ib.count_paths(ib.unroll_circuit(L, majority_rules(L), 0, 2)) == 9


@pytest.mark.parametrize("t", [1, 2, 3, 4])
def test_uniform_fan_in_paths(t):
    L = lat.build_tree(3, 4)
    c = ib.unroll_circuit(L, majority_rules(L), 0, t)
    assert ib.count_paths(c) == 3 ** t
    assert ib.es_bound(c, 0.3) == pytest.approx(3 ** t * 0.4 ** (2 * t), rel=1e-12)


def test_unroll_rejects_small_truncation():
    L = lat.build_tree(3, 2)
    with pytest.raises(ib.CircuitError, match="boundary"):
        ib.unroll_circuit(L, majority_rules(L), 0, 3)


def test_circuit_validation():
    with pytest.raises(ib.CircuitError):
        ib.LayeredCircuit(((ib.Gate((ib.INPUT,), threshold=1), ib.Gate((ib.INPUT,), threshold=1)),))
    with pytest.raises(ib.CircuitError):
        ib.LayeredCircuit(((ib.Gate((0,), threshold=1),),))
    with pytest.raises(ib.CircuitError):
        ib.Gate((ib.INPUT,))


def test_es_bound_examples():
    c = ib.chain_circuit(3)
    assert ib.es_bound(c, 0.3) == pytest.approx(0.4 ** 6, rel=1e-12)
    assert ib.es_bound(c, 0.5) == 0.0
    L = lat.build_toom(8, 8)
    u = ib.unroll_circuit(L, majority_rules(L), 0, 3)
    assert ib.es_bound(u, 0.0) == pytest.approx(ib.count_paths(u), rel=1e-12)


def test_es_bound_matches_path_enumeration():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(60):
        c = ib.random_circuit(rng, max_gates=20)
        lengths = enumerate_paths(c)
        if len(lengths) > 10_000:
            continue
        assert len(lengths) == ib.count_paths(c)
        for eps in (0.0, 0.1, 0.3, 0.45):
            direct = math.fsum((1 - 2 * eps) ** (2 * k) for k in lengths)
            assert ib.es_bound(c, eps) == pytest.approx(direct, rel=1e-12, abs=1e-300)
        checked += 1
    assert checked > 30


def test_exact_mi_examples():
    c = ib.chain_circuit(1)
    assert ib.exact_mi(c, 0.3) == pytest.approx(1 - (-(0.3 * math.log2(0.3)) - 0.7 * math.log2(0.7)), abs=1e-12)
    assert ib.exact_mi(c, 0.3) == pytest.approx(0.1187, abs=1e-4)
    maj = BooleanTable.from_hex("e8", 3)
    ident = ib.LayeredCircuit(((ib.Gate((ib.INPUT, ib.INPUT, ib.INPUT), table=maj),),
                               (ib.Gate((0,), threshold=1),)))
    assert ib.exact_mi(ident, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert ib.exact_mi(ident, 0.5) == pytest.approx(0.0, abs=1e-15)


def test_exact_mi_gate_cap():
    layers = tuple((ib.Gate((ib.INPUT if s == 0 else 0,), threshold=1),) for s in range(25))
    with pytest.raises(ib.CircuitError):
        ib.exact_mi(ib.LayeredCircuit(layers), 0.1)


def test_chain_closed_form_and_data_processing():
    for eps in (0.05, 0.3, 0.45):
        prev = 1.0
        for t in range(1, 11):
            mi = ib.exact_mi(ib.chain_circuit(t), eps)
            assert abs(mi - bsc_chain_mi(eps, t)) < 1e-9
            assert mi <= prev + 1e-15
            prev = mi


def test_squared_attenuation_near_half():
    # I ~ theta^2 / (2 ln 2) for a single noisy copy, so the bound must carry theta^2
    for eps in (0.49, 0.499):
        c = ib.chain_circuit(1)
        ratio = ib.exact_mi(c, eps) / ib.es_bound(c, eps)
        assert ratio == pytest.approx(1 / (2 * math.log(2)), rel=1e-2)


def test_domination_small_random():
    rng = np.random.default_rng(7)
    for _ in range(30):
        c = ib.random_circuit(rng, max_gates=12)
        for eps in (0.1, 0.3, 0.45):
            assert ib.exact_mi(c, eps) <= ib.es_bound(c, eps) + 1e-9


def test_random_circuits_respect_limits():
    rng = np.random.default_rng(0)
    for _ in range(50):
        c = ib.random_circuit(rng, max_gates=20)
        assert c.gate_count <= 20
        assert c.layer_sizes[-1] == 1


def test_tolerance_feasible_examples():
    v = ib.tolerance_feasible(1, 0.3, 0.25)
    assert v.excluded and v.excluded_at_t == 2
    assert str(v) == "excluded_at_t=2"
    for xi in (0.3, 0.1, 0.05):
        n = thm42_min_degree(xi)
        assert not ib.tolerance_feasible(n, xi, 0.25).excluded
        assert str(ib.tolerance_feasible(n, xi, 0.25)) == "not_excluded"
    with pytest.raises(ValueError):
        ib.tolerance_feasible(3, 0.3, 0.5)


@pytest.mark.parametrize("xi", [0.45, 0.3, 0.2, 0.1, 0.07, 0.05])
def test_tolerance_feasible_consistent_with_thm42(xi):
    n = thm42_min_degree(xi)
    for d in range(max(1, n - 5), n + 6):
        assert ib.tolerance_feasible(d, xi, 0.2).excluded == (d < n)


def test_excluded_t_is_least():
    for d, xi, delta in [(1, 0.3, 0.25), (5, 0.2, 0.1), (99, 0.05, 0.3), (20, 0.1, 0.01)]:
        t = ib.tolerance_feasible(d, xi, delta).excluded_at_t
        floor = 1 - (-(delta * math.log2(delta)) - (1 - delta) * math.log2(1 - delta))
        val = lambda s: (d * (2 * xi) ** 2) ** s
        assert val(t) < floor
        assert t == 1 or val(t - 1) >= floor


def test_info_bound_report():
    rep = ib.info_bound(3, 0.2, 0.1, t=4)
    assert rep.path_count == 81
    assert rep.es_bound == pytest.approx(81 * 0.4 ** 8, rel=1e-12)
    assert rep.es_bound <= rep.path_count * (2 * 0.2) ** (2 * 4) * (1 + 1e-12)
    j = rep.to_json_dict()
    assert j["path_count"] == "81"
    assert set(j) == {"d", "xi", "delta", "t", "path_count", "es_bound", "fano_floor", "verdict"}
    assert j["verdict"] == ("not_excluded" if rep.feasible else "excluded")
    big = ib.info_bound(31, 0.4, 0.3, t=200)
    assert big.path_count == 31 ** 200
    huge = ib.info_bound(31, 0.4, 0.3, t=400)
    assert huge.es_bound == math.inf and huge.to_json_dict()["path_count"] == str(31 ** 400)


def test_circuit_report_uniform_fan_in():
    L = lat.build_tree(3, 4)
    c = ib.unroll_circuit(L, majority_rules(L), 0, 3)
    rep = ib.circuit_report(c, 0.3, 0.25)
    assert rep.d == 3 and rep.t == 3
    assert rep.es_bound == pytest.approx(rep.path_count * (2 * rep.xi) ** (2 * rep.t), rel=1e-12)
