import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density
from optomech_sim.errors import (
    IndexOutOfRange,
    NonFinite,
    SpaceMismatch,
    TruncationTooSmall,
    UnknownSlot,
)
from optomech_sim.fock import (
    CompositeSpace,
    DensityMatrix,
    Displacer,
    ModeOps,
    Operator,
    PureState,
    TruncatedSpace,
    coherent_amplitudes,
    coherent_state,
    commutator,
    create,
    destroy,
    displace,
    embed,
    expectation,
    fock_state,
    identity,
    matrix_exponential,
    number,
    partial_trace,
    tensor,
    thermal_state,
)


def sp(dim, label="cavity"):
    return TruncatedSpace(dim, label)


class TestSpaces:
    def test_dim_must_be_at_least_two(self):
        with pytest.raises(ValueError):
            TruncatedSpace(1)

    def test_labels_unique(self):
        with pytest.raises(ValueError):
            CompositeSpace.of(sp(2, "x"), sp(3, "x"))

    def test_composite_dimension(self, pair_space):
        assert pair_space.dim == 12
        assert pair_space.dims == (4, 3)

    def test_unknown_slot(self, pair_space):
        with pytest.raises(UnknownSlot):
            pair_space.index("phonon")


class TestLadder:
    def test_dim2(self):
        assert np.array_equal(destroy(sp(2)).data, [[0, 1], [0, 0]])

    def test_entry_1_2(self):
        assert destroy(sp(3)).data[1, 2] == math.sqrt(2)

    def test_number_from_ladder(self):
        s = sp(4)
        n = create(s) @ destroy(s)
        assert np.max(np.abs(n.data - np.diag([0, 1, 2, 3]))) < 1e-12
        assert np.max(np.abs(n.data - number(s).data)) < 1e-12

    @pytest.mark.parametrize("dim", [2, 5, 17])
    def test_ladder_identity_exact(self, dim):
        a = destroy(sp(dim)).data
        expected = np.zeros((dim, dim))
        for n in range(1, dim):
            expected[n - 1, n] = math.sqrt(n)
        assert np.array_equal(a, expected)


class TestArithmetic:
    def test_commutator_corner(self):
        s = sp(20)
        c = commutator(destroy(s), create(s)).data
        expected = np.eye(20)
        expected[-1, -1] = -19
        assert np.allclose(c, expected, atol=1e-12)

    def test_adjoint_of_i_identity(self):
        x = 1j * identity(sp(3))
        assert np.array_equal(x.dag().data, -1j * np.eye(3))

    def test_self_commutator_zero(self):
        x = destroy(sp(5)) + 0.3j * number(sp(5))
        assert np.count_nonzero(commutator(x, x).data) == 0

    def test_double_adjoint_exact(self):
        rng = np.random.default_rng(1)
        x = Operator(sp(6), rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
        assert np.array_equal(x.dag().dag().data, x.data)

    def test_space_mismatch(self):
        with pytest.raises(SpaceMismatch):
            destroy(sp(3)) + destroy(sp(4))
        with pytest.raises(SpaceMismatch):
            destroy(sp(3)) @ destroy(sp(3, "mech"))

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFinite):
            Operator(sp(2), [[np.nan, 0], [0, 1]])

    def test_immutable(self):
        a = destroy(sp(3))
        with pytest.raises(ValueError):
            a.data[0, 1] = 5


class TestTensor:
    def test_identities(self):
        x = tensor(identity(sp(2)), identity(sp(3, "mech")))
        assert np.array_equal(x.data, np.eye(6))

    def test_number_on_product_state(self):
        cav, mech = sp(4), sp(3, "mech")
        op = tensor(number(cav), identity(mech))
        psi = tensor(fock_state(cav, 2), fock_state(mech, 0))
        assert np.allclose(op @ psi, 2 * psi.amplitudes)

    def test_interaction_expectation(self):
        cav, mech = sp(3), sp(30, "mech")
        b = destroy(mech)
        op = tensor(number(cav), b + b.dag())
        psi = tensor(fock_state(cav, 1), coherent_state(mech, 1.0))
        assert expectation(psi, op).real == pytest.approx(2.0, abs=1e-9)

    def test_embed_matches_tensor(self, pair_space):
        a = destroy(pair_space.slot("mech"))
        lifted = embed(a, "mech", pair_space)
        assert np.array_equal(lifted.data, tensor(identity(pair_space.slot("cavity")), a).data)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 5), st.integers(2, 5), st.integers(0, 10_000))
    def test_trace_factorises(self, d1, d2, seed):
        rng = np.random.default_rng(seed)
        x = Operator(sp(d1), rng.normal(size=(d1, d1)) + 1j * rng.normal(size=(d1, d1)))
        y = Operator(sp(d2, "mech"), rng.normal(size=(d2, d2)))
        assert tensor(x, y).trace() == pytest.approx(x.trace() * y.trace(), abs=1e-12 * (1 + abs(x.trace() * y.trace())))


class TestExponential:
    def test_zero(self):
        assert np.allclose(matrix_exponential(0 * identity(sp(4))).data, np.eye(4))

    def test_parity(self):
        e = matrix_exponential(1j * math.pi * number(sp(4)))
        assert np.allclose(e.data, np.diag([1, -1, 1, -1]), atol=1e-12)

    def test_displacement_vs_coherent_amplitudes(self):
        s = sp(30)
        psi = displace(s, 1.0).data[:, 0]
        ref = np.array([math.exp(-0.5) / math.sqrt(math.factorial(n)) for n in range(30)])
        assert np.max(np.abs(psi - ref)) < 1e-8

    def test_nonfinite(self):
        x = Operator(sp(2), [[np.inf, 0], [0, 0]], check=False)
        with pytest.raises(NonFinite):
            matrix_exponential(x)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.1, 10.0))
    def test_inverse(self, seed, scale):
        rng = np.random.default_rng(seed)
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        x = Operator(sp(6), scale * m / np.linalg.norm(m, 2))
        prod = matrix_exponential(x) @ matrix_exponential(-x)
        assert np.max(np.abs(prod.data - np.eye(6))) < 1e-9


class TestDisplacer:
    @pytest.mark.parametrize("z", [0.0, 0.7, -1.2 + 0.4j, 2j])
    def test_block_matches_expm(self, z):
        big = displace(sp(60), z).data[:12, :12]
        assert np.max(np.abs(Displacer(60).block(z, 12) - big)) < 1e-12


class TestStates:
    def test_coherent_zero_is_vacuum(self):
        psi = coherent_state(sp(5), 0)
        assert np.array_equal(psi.amplitudes, [1, 0, 0, 0, 0])

    def test_coherent_mean(self):
        s = sp(30)
        assert expectation(coherent_state(s, 2), number(s)).real == pytest.approx(4, abs=1e-6)

    def test_coherent_truncation_guard(self):
        with pytest.raises(TruncationTooSmall):
            coherent_state(sp(8), 2)

    def test_coherent_amplitudes_closed_form(self):
        alpha = 0.8 - 0.5j
        psi = coherent_state(sp(25), alpha)
        assert psi.leakage < 1e-8
        n = np.arange(25)
        ref = np.exp(-abs(alpha) ** 2 / 2) * alpha ** n / np.sqrt([float(math.factorial(k)) for k in n])
        assert np.max(np.abs(psi.amplitudes - ref)) < 1e-10

    def test_norm(self):
        psi = PureState(sp(3), [1, 2j, 3])
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1, abs=1e-12)

    def test_thermal_zero_is_vacuum(self):
        rho = thermal_state(sp(5), 0)
        assert rho.data[0, 0] == 1 and np.count_nonzero(rho.data) == 1

    def test_thermal_mean(self):
        s = sp(40)
        assert expectation(thermal_state(s, 1.0), number(s)).real == pytest.approx(1, abs=1e-6)

    def test_fock_range(self):
        with pytest.raises(IndexOutOfRange):
            fock_state(sp(3), 3)

    def test_fock_one_has_no_pairs(self):
        s = sp(4)
        a = destroy(s)
        assert expectation(fock_state(s, 1), a.dag() @ a.dag() @ a @ a) == 0

    def test_density_validation(self):
        from optomech_sim.errors import InvalidState
        with pytest.raises(InvalidState):
            DensityMatrix(sp(2), [[0.5, 0.3], [0.1, 0.5]])
        with pytest.raises(InvalidState):
            DensityMatrix(sp(2), [[1.2, 0], [0, -0.2]])


class TestPartialTrace:
    def test_product_state(self, pair_space):
        ra = random_density(CompositeSpace.of(pair_space.slot("cavity")), seed=3)
        rb = random_density(CompositeSpace.of(pair_space.slot("mech")), seed=4)
        red = partial_trace(tensor(ra, rb), "cavity")
        assert np.max(np.abs(red.data - ra.data)) < 1e-12

    def test_bell_state(self):
        cav, mech = sp(2), sp(2, "mech")
        psi = PureState(CompositeSpace.of(cav, mech), [1, 0, 0, 1])
        for label in ("cavity", "mech"):
            assert np.allclose(partial_trace(psi, label).data, np.eye(2) / 2, atol=1e-15)

    def test_unknown_slot(self, pair_space):
        with pytest.raises(UnknownSlot):
            partial_trace(random_density(pair_space), "phonon")

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_trace_and_hermiticity(self, seed):
        space = CompositeSpace.of(sp(4), sp(3, "mech"))
        rho = random_density(space, seed)
        for label in ("cavity", "mech"):
            red = partial_trace(rho, label).data
            assert abs(np.trace(red) - 1) < 1e-12
            assert np.max(np.abs(red - red.conj().T)) < 1e-12


class TestExpectation:
    def test_vacuum_number(self):
        s = sp(3)
        assert expectation(fock_state(s, 0).dm(), number(s)) == 0

    def test_identity(self, pair_space):
        rho = random_density(pair_space, seed=9)
        assert expectation(rho, identity(pair_space)).real == pytest.approx(1, abs=1e-8)

    def test_mismatch(self, pair_space):
        with pytest.raises(SpaceMismatch):
            expectation(random_density(pair_space), number(sp(4)))


def test_mode_ops_layout():
    ops = ModeOps.build(3, 4)
    assert ops.space.labels == ("cavity", "mech")
    assert np.max(np.abs(ops.n_a.data - (ops.a.dag() @ ops.a).data)) < 1e-12
    assert ops.cavity.dim == 3 and ops.mech.dim == 4


def test_coherent_amplitudes_unnormalised():
    c = coherent_amplitudes(4, 1.0)
    assert c[0] == pytest.approx(math.exp(-0.5))
