import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import dihedral3_qutrit
from symcost.core import haar_unitary, kron_power, random_density, trace_distance
from symcost.errors import (
    ClosureViolation,
    DimensionCapExceeded,
    DimensionMismatch,
    HomomorphismViolation,
    NonUnitaryElement,
    NonUnitaryInput,
)
from symcost.group_rep import (
    FiniteGroup,
    TwirlChannel,
    collective_twirl,
    is_symmetric,
    is_symmetry_preserving,
    make_cyclic_rep,
    make_explicit_rep,
    product_rep,
    symmetric_basis,
    twirl,
    twirl_bruteforce,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1, -1]).astype(complex)
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)

seeds = st.integers(0, 2**32 - 1)


@st.composite
def cyclic_reps(draw, max_dim=3):
    order = draw(st.integers(2, 5))
    dim = draw(st.integers(2, max_dim))
    charges = draw(st.lists(st.integers(0, order - 1), min_size=dim, max_size=dim))
    return make_cyclic_rep(order, charges)


class TestGroups:
    def test_cyclic_qubit_is_pauli_z_pair(self, z2):
        np.testing.assert_allclose(z2.unitaries, [I2, Z], atol=1e-15)

    def test_qutrit_clock(self):
        rep = make_cyclic_rep(3, [0, 1, 2])
        u1 = rep.unitaries[1]
        np.testing.assert_allclose(np.linalg.matrix_power(u1, 3), np.eye(3), atol=1e-12)
        np.testing.assert_allclose(u1 @ u1, rep.unitaries[2], atol=1e-12)

    def test_trivial_rep(self):
        rep = make_cyclic_rep(2, [0, 0])
        np.testing.assert_array_equal(rep.unitaries, [I2, I2])

    def test_swapped_z2_table_rejected(self):
        with pytest.raises((ClosureViolation, HomomorphismViolation)):
            make_explicit_rep([[1, 0], [0, 1]], [I2, Z])

    def test_pauli_quotient_is_projective(self):
        table = np.array([[a ^ b for b in range(4)] for a in range(4)])
        with pytest.raises(HomomorphismViolation) as info:
            make_explicit_rep(table, [I2, X, Z, Y])
        assert info.value.deviation > 1.0

    def test_dihedral_qutrit_accepted(self):
        table, mats = dihedral3_qutrit()
        assert table.shape == (6, 6)
        rep = make_explicit_rep(table, mats)
        assert rep.order == 6 and rep.dim == 3
        for a in range(6):
            for b in range(6):
                np.testing.assert_allclose(mats[a] @ mats[b], mats[table[a, b]], atol=1e-12)

    def test_non_associative_latin_square(self):
        # Latin square with two-sided identity 0 and self-inverse elements, but not a group
        t = np.array([[0, 1, 2, 3, 4],
                      [1, 0, 3, 4, 2],
                      [2, 4, 0, 1, 3],
                      [3, 2, 4, 0, 1],
                      [4, 3, 1, 2, 0]])
        with pytest.raises(ClosureViolation):
            FiniteGroup.from_table(t)

    def test_out_of_range_entry(self):
        with pytest.raises(ClosureViolation):
            FiniteGroup.from_table([[0, 2], [1, 0]])

    def test_non_unitary(self):
        with pytest.raises(NonUnitaryElement):
            make_explicit_rep([[0, 1], [1, 0]], [I2, 2 * Z])

    def test_large_cyclic_group_sampled_associativity(self):
        g = FiniteGroup.cyclic(70)
        assert g.order == 70 and g.identity == 0
        assert all(g.mul(a, int(g.inverse[a])) == 0 for a in range(70))

    def test_product_rep_matches_tensor_twirl(self, rng):
        rep = make_cyclic_rep(3, [0, 1, 1])
        prod = product_rep(rep, 2)
        assert prod.order == 9 and prod.dim == 9
        tau = random_density(9, rng)
        np.testing.assert_allclose(twirl(prod, tau), twirl(TwirlChannel(rep, 2), tau), atol=1e-12)

    def test_product_rep_cap(self, z2):
        with pytest.raises(DimensionCapExceeded):
            product_rep(z2, 13)


class TestTwirl:
    def test_plus_to_maximally_mixed(self, z2, plus):
        np.testing.assert_allclose(twirl(z2, plus), I2 / 2, atol=1e-15)

    def test_manual_dephasing(self, z2, rng):
        rho = random_density(2, rng)
        np.testing.assert_allclose(twirl(z2, rho), (rho + Z @ rho @ Z) / 2, atol=1e-15)

    def test_dimension_mismatch(self, z2):
        with pytest.raises(DimensionMismatch):
            twirl(TwirlChannel(z2, 2), np.eye(3) / 3)

    @pytest.mark.parametrize("seed", range(50))
    def test_idempotent_and_fixed_point(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 4))
        rep = make_cyclic_rep(int(rng.integers(2, 5)), list(rng.integers(0, 4, size=d)))
        n = int(rng.integers(1, 3))
        tau = random_density(d ** n, rng)
        t1 = twirl(TwirlChannel(rep, n), tau)
        np.testing.assert_allclose(twirl(TwirlChannel(rep, n), t1), t1, atol=1e-10)
        for u in rep.unitaries:
            uu = kron_power(u, n)
            np.testing.assert_allclose(uu @ t1 @ uu.conj().T, t1, atol=1e-10)

    @pytest.mark.parametrize("seed", range(50))
    def test_two_copy_factorization_against_bruteforce(self, seed):
        rng = np.random.default_rng(1000 + seed)
        if seed % 3 == 0:
            rep = make_explicit_rep(*dihedral3_qutrit())
        else:
            d = int(rng.integers(2, 4))
            rep = make_cyclic_rep(int(rng.integers(2, 5)), list(rng.integers(0, 4, size=d)))
        tau = rng.normal(size=(rep.dim ** 2,) * 2) + 1j * rng.normal(size=(rep.dim ** 2,) * 2)
        np.testing.assert_allclose(twirl(TwirlChannel(rep, 2), tau), twirl_bruteforce(rep, tau, 2), atol=1e-10)

    def test_non_diagonal_rep_fixed_points(self, rng):
        rep = make_explicit_rep(*dihedral3_qutrit())
        t = twirl(rep, random_density(3, rng))
        for u in rep.unitaries:
            np.testing.assert_allclose(u @ t @ u.conj().T, t, atol=1e-12)

    def test_collective_is_coarser(self, z2, plus):
        rho2 = kron_power(plus, 2)
        coll = collective_twirl(z2, rho2)
        manual = (rho2 + np.kron(Z, Z) @ rho2 @ np.kron(Z, Z)) / 2
        np.testing.assert_allclose(coll, manual, atol=1e-15)
        rep = make_explicit_rep(*dihedral3_qutrit())
        tau = random_density(9, np.random.default_rng(5))
        brute = sum(np.kron(u, u) @ tau @ np.kron(u, u).conj().T for u in rep.unitaries) / rep.order
        np.testing.assert_allclose(collective_twirl(rep, tau, 2), brute, atol=1e-12)

    @given(cyclic_reps(), seeds)
    def test_twirl_contracts_trace_distance(self, rep, seed):
        rng = np.random.default_rng(seed)
        a, b = random_density(rep.dim, rng), random_density(rep.dim, rng)
        assert trace_distance(twirl(rep, a), twirl(rep, b)) <= trace_distance(a, b) + 1e-12


class TestSymmetry:
    def test_maximally_mixed(self):
        for rep in (make_cyclic_rep(3, [0, 1, 2]), make_explicit_rep(*dihedral3_qutrit())):
            assert is_symmetric(rep, np.eye(3) / 3).symmetric

    def test_plus_witness(self, z2, plus):
        w = is_symmetric(z2, plus)
        assert not w.symmetric
        assert w.worst_element == (0, 1)
        assert w.worst_deviation == pytest.approx(2.0, abs=1e-12)
        assert w.twirl_distance == pytest.approx(1.0, abs=1e-12)

    @given(cyclic_reps(), seeds)
    def test_twirled_state_is_symmetric(self, rep, seed):
        rho = random_density(rep.dim, np.random.default_rng(seed))
        assert is_symmetric(rep, twirl(rep, rho)).symmetric

    @pytest.mark.parametrize("d,charges,size", [(2, [0, 1], 2), (2, [0, 0], 4), (3, [0, 1, 2], 3)])
    def test_basis_sizes(self, d, charges, size):
        b = symmetric_basis(make_cyclic_rep(d, charges))
        assert len(b) == size

    @pytest.mark.parametrize("n", [1, 2])
    def test_basis_is_orthonormal_and_fixed(self, n):
        rep = make_explicit_rep(*dihedral3_qutrit())
        b = symmetric_basis(rep, n)
        gram = np.einsum("aij,bji->ab", b.basis, b.basis)
        np.testing.assert_allclose(gram, np.eye(len(b)), atol=1e-10)
        ch = TwirlChannel(rep, n)
        for el in b.basis:
            np.testing.assert_allclose(twirl(ch, el), el, atol=1e-10)
            np.testing.assert_allclose(el, el.conj().T, atol=1e-12)

    def test_basis_spans_fixed_space(self, rng):
        rep = make_cyclic_rep(3, [0, 1, 1])
        b = symmetric_basis(rep)
        t = twirl(rep, random_density(3, rng))
        np.testing.assert_allclose(b.combine(b.coefficients(t)), t, atol=1e-12)

    def test_group_elements_preserve_symmetry(self):
        rep = make_explicit_rep(*dihedral3_qutrit())
        for u in rep.unitaries:
            assert is_symmetry_preserving(rep, u).symmetric

    def test_hadamard_is_not_symmetry_preserving(self, z2):
        w = is_symmetry_preserving(z2, H)
        assert not w.symmetric and w.worst_deviation == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(0, 2 * np.pi))
    def test_diagonal_phase_preserves_symmetry(self, phi):
        rep = make_cyclic_rep(2, [0, 1])
        assert is_symmetry_preserving(rep, np.diag([1, np.exp(1j * phi)])).symmetric

    def test_non_unitary_input(self, z2):
        with pytest.raises(NonUnitaryInput):
            is_symmetry_preserving(z2, 2 * I2)

    def test_local_haar_is_not_preserving_on_two_copies(self, z2, rng):
        v = np.kron(haar_unitary(2, rng), I2)
        assert not is_symmetry_preserving(z2, v).symmetric
