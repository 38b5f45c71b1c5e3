import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symcost.core import kron_power, op_leq, pure_state, random_density
from symcost.errors import DimensionCapExceeded
from symcost.typicality import (
    merge_symbols,
    min_copies_for_mass,
    typical_operator_bound_holds,
    typical_projector,
    typical_set,
)


def enumeration_oracle(p, n, delta):
    """Walk every sequence and apply the typicality window literally."""
    h = -sum(x * math.log2(x) for x in p if x > 0)
    mass, count = 0.0, 0
    for seq in itertools.product(range(len(p)), repeat=n):
        prob = math.prod(p[i] for i in seq)
        if prob > 0 and 2 ** (-n * (h + delta)) <= prob * (1 + 1e-12) and prob <= 2 ** (-n * (h - delta)) * (1 + 1e-12):
            mass += prob
            count += 1
    return mass, count


def binomial_oracle(p0, n, delta):
    h = -(p0 * math.log2(p0) + (1 - p0) * math.log2(1 - p0))
    mass, count = 0.0, 0
    for k in range(n + 1):
        nlp = -(n - k) * math.log2(p0) - k * math.log2(1 - p0)
        if abs(nlp - n * h) <= n * delta:
            mass += math.comb(n, k) * p0 ** (n - k) * (1 - p0) ** k
            count += math.comb(n, k)
    return mass, count


class TestTypicalSet:
    def test_binomial_oracle_reference_point(self):
        ts = typical_set([0.9, 0.1], 12, 0.2)
        mass, count = binomial_oracle(0.9, 12, 0.2)
        e_mass, e_count = enumeration_oracle([0.9, 0.1], 12, 0.2)
        assert abs(ts.total_mass - mass) <= 1e-12 and abs(ts.total_mass - e_mass) <= 1e-12
        assert ts.cardinality == count == e_count == len(ts.sequences)

    def test_deterministic_source(self):
        ts = typical_set([1.0, 0.0], 7, 0.1)
        assert ts.total_mass == pytest.approx(1.0) and ts.cardinality == 1
        assert ts.sequences == [(0,) * 7]

    @pytest.mark.parametrize("delta", [1e-3, 0.1, 2.0])
    def test_uniform_source(self, delta):
        ts = typical_set([0.5, 0.5], 4, delta)
        assert ts.cardinality == 16 and ts.total_mass == pytest.approx(1.0, abs=1e-12)

    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=4), st.integers(1, 6), st.floats(0.01, 1.0))
    def test_matches_enumeration(self, weights, n, delta):
        p = list(np.array(weights) / sum(weights))
        ts = typical_set(p, n, delta)
        mass, count = enumeration_oracle(p, n, delta)
        assert ts.total_mass == pytest.approx(mass, abs=1e-12)
        assert ts.cardinality == count
        assert ts.cardinality_bound_holds
        for seq in ts.sequences:
            assert ts.contains(seq)

    @given(st.floats(0.51, 0.99), st.integers(1, 400), st.floats(0.01, 0.5))
    def test_cardinality_bound_and_binomial_sum(self, p0, n, delta):
        ts = typical_set([p0, 1 - p0], n, delta)
        assert ts.cardinality_bound_holds
        mass, count = binomial_oracle(p0, n, delta)
        assert ts.total_mass == pytest.approx(mass, abs=1e-9)
        assert ts.cardinality == count

    def test_large_n_mass_convergence(self):
        n0 = min_copies_for_mass([0.9, 0.1], 0.1, 0.05, n_max=2000)
        assert n0 is not None
        assert typical_set([0.9, 0.1], n0, 0.1).total_mass >= 0.95
        assert typical_set([0.9, 0.1], 10_000, 0.1).total_mass > 1 - 1e-9

    def test_validation(self):
        with pytest.raises(ValueError):
            typical_set([0.5, 0.5], 0, 0.1)
        with pytest.raises(ValueError):
            typical_set([0.5, 0.5], 3, 0.0)

    def test_merge_symbols(self):
        values, mults, rep = merge_symbols([0.25, 0.5, 0.25 + 1e-12, 0.0])
        np.testing.assert_allclose(values, [0.25, 0.5])
        np.testing.assert_array_equal(mults, [2, 1])
        assert rep[3] == 0.0 and rep[0] == rep[2]


class TestTypicalProjector:
    def test_pure_state(self, plus):
        proj = typical_projector(plus, 3, 0.1)
        assert proj.rank == 1
        np.testing.assert_allclose(proj.matrix, kron_power(plus, 3), atol=1e-12)

    def test_trace_equals_classical_mass(self):
        rho = np.diag([0.9, 0.1])
        proj = typical_projector(rho, 12, 0.2)
        mass = np.einsum("ij,ji->", proj.matrix, kron_power(rho, 12)).real
        assert mass == pytest.approx(typical_set([0.9, 0.1], 12, 0.2).total_mass, abs=1e-12)
        assert round(np.trace(proj.matrix).real) == proj.rank
        assert typical_operator_bound_holds(proj)

    @pytest.mark.parametrize("seed", range(6))
    def test_projector_properties(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(3, rng)
        proj = typical_projector(rho, 4, 0.3)
        p = proj.matrix
        rn = kron_power(rho, 4)
        np.testing.assert_allclose(p @ p, p, atol=1e-10)
        np.testing.assert_allclose(p @ rn, rn @ p, atol=1e-10)
        assert round(np.trace(p).real) == proj.rank
        assert np.trace(p @ rn).real == pytest.approx(proj.index_set.total_mass, abs=1e-10)
        assert typical_operator_bound_holds(proj)
        dense = 2.0 ** (4 * (proj.index_set.entropy - 0.3)) * (p @ rn @ p)
        assert op_leq(dense, p)

    def test_degenerate_spectrum(self):
        rho = np.diag([0.4, 0.4, 0.2])
        proj = typical_projector(rho, 3, 0.05)
        mass, count = enumeration_oracle([0.4, 0.4, 0.2], 3, 0.05)
        assert proj.rank == count
        assert proj.index_set.total_mass == pytest.approx(mass, abs=1e-12)

    def test_cap(self):
        with pytest.raises(DimensionCapExceeded):
            typical_projector(np.eye(2) / 2, 13, 0.1)
        lazy = typical_projector(np.eye(2) / 2, 13, 0.1, materialize=False)
        assert lazy.matrix is None and lazy.rank == 2 ** 13

    def test_unmaterialized_bound_check(self):
        lazy = typical_projector(pure_state([1, 0]), 2, 0.1, materialize=False)
        with pytest.raises(ValueError):
            typical_operator_bound_holds(lazy)
