import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from faultca import lattice as lat, rng
from faultca.faults import (ADVERSARIAL, PURE, FaultError, FaultRealization, FaultSpec, apply_fault,
                            combined_rate, sample_manufacturing)


def test_combined_rate_examples():
    assert combined_rate(0.0, 0.3) == 0.3
    assert combined_rate(0.3, 0.0) == 0.3
    assert combined_rate(0.1, 0.2) == pytest.approx(0.28, abs=1e-15)
    with pytest.raises(FaultError):
        combined_rate(1.5, 0)


@given(st.floats(0, 1), st.floats(0, 1))
def test_epsilon_always_recomputed(a, b):
    spec = FaultSpec(a, b)
    assert spec.epsilon == pytest.approx(1 - (1 - a) * (1 - b), abs=1e-12)


def test_from_xi():
    spec = FaultSpec.from_xi(0.4)
    assert spec.epsilon == 0.1
    assert spec.xi == 0.4


def test_pure_forbids_manufacturing():
    with pytest.raises(FaultError, match="adversary"):
        FaultSpec(0.1, 0.1, PURE)


def test_apply_fault_examples():
    pure = FaultSpec(0.1, 0.0, PURE)
    adv = FaultSpec(0.1, 0.0, ADVERSARIAL, a=0)
    assert apply_fault(0, 1, False, pure) == 1
    assert apply_fault(1, 1, False, pure) == 0
    assert apply_fault(0, 1, False, adv) == 1
    assert apply_fault(0, 0, False, adv) == 0
    assert apply_fault(0, 0, True, adv) == 1
    assert apply_fault(1, 1, False, FaultSpec(0.1, 0.0, ADVERSARIAL, a=1)) == 0
    with pytest.raises(FaultError):
        apply_fault(0, 0, True, pure)


def test_manufacturing_extremes():
    L = lat.build_tree(3, 3)
    assert sample_manufacturing(L, 0.0, 1) == set()
    assert sample_manufacturing(L, 1.0, 1) == set(range(L.vertex_count))


def test_manufacturing_concentration():
    L = lat.Lattice.from_adjacency([[] for _ in range(100_000)], kind="custom")
    frac = len(sample_manufacturing(L, 0.2, 42)) / 100_000
    assert 0.19 <= frac <= 0.21


def test_manufacturing_deterministic_and_replicate_dependent():
    L = lat.build_tree(5, 3)
    a = sample_manufacturing(L, 0.3, 9, replicate=2)
    assert a == sample_manufacturing(L, 0.3, 9, replicate=2)
    assert a != sample_manufacturing(L, 0.3, 9, replicate=3)


def test_transient_order_independent():
    real = FaultRealization(5, 3, 0.4, frozenset())
    keys = np.arange(500)
    whole = real.transient(keys, 7)
    perm = np.random.default_rng(0).permutation(500)
    assert np.array_equal(real.transient(keys[perm], 7), whole[perm])
    assert np.array_equal(np.concatenate([real.transient(keys[:100], 7), real.transient(keys[100:], 7)]), whole)


def test_transient_rate_and_independence():
    real = FaultRealization(1, 0, 0.3, frozenset())
    bits = np.array([real.transient(np.arange(20_000), t) for t in (1, 2)])
    assert abs(bits.mean() - 0.3) < 0.01
    # successive times uncorrelated
    c = np.corrcoef(bits[0], bits[1])[0, 1]
    assert abs(c) < 0.03


def test_transient_independent_of_manufacturing():
    L = lat.Lattice.from_adjacency([[] for _ in range(50_000)], kind="custom")
    mfg = np.zeros(50_000, bool)
    mfg[list(sample_manufacturing(L, 0.5, 11))] = True
    u = rng.uniforms(11, np.arange(50_000), 1, 0, rng.STREAM_TRANSIENT) < 0.5
    assert abs(np.corrcoef(mfg, u)[0, 1]) < 0.03
