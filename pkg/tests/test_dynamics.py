import math

import numpy as np
import pytest
import scipy.linalg

from conftest import random_density
from optomech_sim.dynamics import (
    ANOMALOUS,
    NORMAL,
    Channel,
    DissipatorSpec,
    StepperOptions,
    apply_dissipator,
    evolve,
    h_nr_term,
    liouvillian_apply,
    liouvillian_matrix,
    optomech_dissipators,
    steady_state,
    trace_distance,
    unvec,
    vec,
)
from optomech_sim.errors import DimensionTooLarge, SingularSystem, SpaceMismatch, TruncationLeak
from optomech_sim.fock import (
    ModeOps,
    TruncatedSpace,
    coherent_state,
    destroy,
    fock_state,
    number,
    tensor,
)
from optomech_sim.model import DerivedParams, SystemParams, build_h_oms, matched_bath


def generic(cavity_dim=4, mech_dim=4, **kw):
    """Small instance with every channel active and non-trivial bath correlations."""
    base = dict(delta_m=3.0, lam=1.0, g0=1.0, gamma=1.0, r_e=0.3, phi_e=0.4, eps_p=0.3,
                delta_c=0.5)
    base.update(kw)
    p = SystemParams(**base)
    d = DerivedParams.from_params(p)
    ops = ModeOps.build(cavity_dim, mech_dim)
    return p, d, ops, build_h_oms(p, d, ops), optomech_dissipators(p, d, ops)


def cavity_only(dim=6, kappa=1.0, delta=0.0, eps=0.0):
    s = TruncatedSpace(dim, "cavity")
    a = destroy(s)
    H = delta * number(s) + eps * (a + a.dag())
    return s, H, DissipatorSpec((Channel(a, kappa, NORMAL),))


class TestDissipators:
    def test_vacuum_is_dark(self):
        s = TruncatedSpace(4)
        assert np.count_nonzero(apply_dissipator(NORMAL, destroy(s), fock_state(s, 0).dm())) == 0

    def test_normal_traceless(self):
        s = TruncatedSpace(5)
        rho = random_density(s, seed=2)
        assert abs(np.trace(apply_dissipator(NORMAL, destroy(s), rho))) < 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_full_rhs_trace_preserving(self, seed):
        p, d, ops, H, D = generic()
        assert len(D) == 5
        rho = random_density(ops.space, seed=seed)
        assert abs(np.trace(liouvillian_apply(H, D, rho))) < 1e-10

    def test_hermiticity_preserved(self):
        p, d, ops, H, D = generic()
        out = liouvillian_apply(H, D, random_density(ops.space, seed=7))
        assert np.max(np.abs(out - out.conj().T)) < 1e-12

    def test_empty_generator(self):
        s = TruncatedSpace(3)
        assert np.count_nonzero(liouvillian_apply(None, DissipatorSpec(), random_density(s))) == 0

    def test_conjugate_pairs_required(self):
        s = TruncatedSpace(3)
        with pytest.raises(ValueError):
            DissipatorSpec((Channel(destroy(s), 0.2j, ANOMALOUS),))

    def test_negative_normal_rate_rejected(self):
        with pytest.raises(ValueError):
            Channel(destroy(TruncatedSpace(3)), -1.0, NORMAL)

    def test_space_mismatch(self):
        s = TruncatedSpace(3)
        with pytest.raises(SpaceMismatch):
            apply_dissipator(NORMAL, destroy(s), random_density(TruncatedSpace(4)))

    def test_matched_bath_fixed_point(self):
        p = matched_bath(SystemParams(delta_m=3.0, lam=1.0, g0=0.0, gamma=1.0, eps_p=0.0))
        d = DerivedParams.from_params(p)
        ops = ModeOps.build(3, 4)
        rho = tensor(fock_state(ops.cavity, 0), fock_state(ops.mech, 0)).dm()
        out = liouvillian_apply(build_h_oms(p, d, ops), optomech_dissipators(p, d, ops), rho)
        assert np.max(np.abs(out)) < 1e-12


class TestLiouvillianMatrix:
    def test_vec_round_trip(self):
        m = np.arange(9.0).reshape(3, 3)
        assert vec(m)[1] == m[1, 0]
        assert np.array_equal(unvec(vec(m)), m)

    def test_matches_matrix_free(self):
        p, d, ops, H, D = generic(cavity_dim=3, mech_dim=4)
        L = liouvillian_matrix(H, D)
        err = 0.0
        for seed in range(10):
            rho = random_density(ops.space, seed=seed).data
            err = max(err, np.max(np.abs(unvec(L @ vec(rho)) - liouvillian_apply(H, D, rho))))
        assert err < 1e-12

    def test_trace_row(self):
        p, d, ops, H, D = generic(cavity_dim=3, mech_dim=3)
        L = liouvillian_matrix(H, D, sparse=False)
        left = vec(np.eye(ops.space.dim)).conj() @ L
        assert np.max(np.abs(left)) < 1e-10

    def test_no_gain(self):
        p, d, ops, H, D = generic(cavity_dim=3, mech_dim=3)
        ev = scipy.linalg.eigvals(liouvillian_matrix(H, D, sparse=False))
        assert ev.real.max() <= 1e-9

    def test_dimension_guard(self):
        p, d, ops, H, D = generic(cavity_dim=3, mech_dim=4)
        with pytest.raises(DimensionTooLarge):
            liouvillian_matrix(H, D, max_dim=10)


class TestSteadyState:
    def test_undriven_cavity_vacuum(self):
        s, H, D = cavity_only(delta=0.7)
        rho = steady_state(H, D)
        assert rho.data[0, 0].real == pytest.approx(1, abs=1e-12)

    @pytest.mark.parametrize("delta", [0.0, 0.5, 2.0])
    def test_weak_drive_occupation(self, delta):
        s, H, D = cavity_only(dim=8, delta=delta, eps=0.1)
        rho = steady_state(H, D)
        n = np.real(np.trace(rho.data @ number(s).data))
        assert n == pytest.approx(0.01 / (delta ** 2 + 0.25), rel=0.02)

    def test_degenerate_manifold_reported(self):
        s = TruncatedSpace(3)
        with pytest.raises(SingularSystem):
            steady_state(number(s), DissipatorSpec())

    def test_matches_long_time_evolution(self):
        p, d, ops, H, D = generic(cavity_dim=8, mech_dim=6)
        ss = steady_state(H, D)
        rho0 = tensor(fock_state(ops.cavity, 0), fock_state(ops.mech, 0)).dm()
        traj = evolve(rho0, H, D, [0.0, 50.0], opts=StepperOptions(method="lawson", safety=1.0))
        assert trace_distance(traj.states[-1], ss) < 1e-6


class TestEvolve:
    def test_cavity_decay_law(self):
        s, H, D = cavity_only(dim=5, delta=0.3)
        ts = np.linspace(0, 3, 7)
        traj = evolve(fock_state(s, 1), H, D, ts, opts=StepperOptions(observables={"n": number(s)}))
        assert np.max(np.abs(traj.expectations["n"].real - np.exp(-ts))) < 1e-6

    def test_coherent_decay_mean(self):
        s, H, D = cavity_only(dim=20)
        ts = np.linspace(0, 2, 5)
        traj = evolve(coherent_state(s, 1.5), H, D, ts,
                      opts=StepperOptions(observables={"n": number(s)}))
        assert np.max(np.abs(traj.expectations["n"].real - 2.25 * np.exp(-ts))) < 1e-6

    def test_harmonic_rotation(self):
        s = TruncatedSpace(30, "mech")
        w, beta = 2.0, 1.0 + 0.5j
        ts = np.linspace(0, 2, 9)
        traj = evolve(coherent_state(s, beta), w * number(s), DissipatorSpec(), ts,
                      opts=StepperOptions(observables={"b": destroy(s)}))
        assert np.max(np.abs(traj.expectations["b"] - beta * np.exp(-1j * w * ts))) < 1e-6

    def test_unitary_purity_conserved(self):
        p, d, ops, H, D = generic(cavity_dim=5, mech_dim=10, eps_p=0.0)
        psi = tensor(coherent_state(ops.cavity, 0.3, leakage_tol=1e-2),
                     fock_state(ops.mech, 1))
        traj = evolve(psi, H, DissipatorSpec(), np.linspace(0, 1, 5))
        assert all(abs(r.purity() - 1) < 1e-8 for r in traj.states)

    def test_lawson_matches_rk4(self):
        p, d, ops, H, D = generic(cavity_dim=6, mech_dim=8)
        rho0 = tensor(fock_state(ops.cavity, 1), fock_state(ops.mech, 0)).dm()
        ts = [0.0, 0.5, 1.5]
        a = evolve(rho0, H, D, ts, opts=StepperOptions(method="rk4"))
        b = evolve(rho0, H, D, ts, opts=StepperOptions(method="lawson", phase_step=0.2))
        assert max(trace_distance(x, y) for x, y in zip(a.states, b.states)) < 1e-7

    def test_invariants_along_trajectory(self):
        p, d, ops, H, D = generic(cavity_dim=5, mech_dim=10)
        rho0 = tensor(fock_state(ops.cavity, 0), fock_state(ops.mech, 0)).dm()
        traj = evolve(rho0, H, D, np.linspace(0, 2, 11))
        assert traj.max_trace_drift < 1e-8
        assert traj.max_hermiticity_error < 1e-9
        assert traj.min_eigenvalue > -1e-6
        for rho in traj.states:
            rho.validate(herm_tol=1e-9, pos_tol=1e-6)

    def test_bitwise_deterministic(self):
        p, d, ops, H, D = generic(cavity_dim=5, mech_dim=8, omega_d=20.0, phi_d=math.pi)
        rho0 = tensor(fock_state(ops.cavity, 0), fock_state(ops.mech, 0)).dm()
        ts = np.linspace(0, 0.5, 6)
        runs = [evolve(rho0, H, D, ts, H_time=h_nr_term(p, d, ops)) for _ in range(2)]
        assert all(np.array_equal(x.data, y.data) for x, y in zip(runs[0].states, runs[1].states))

    def test_time_dependent_step_rule(self):
        p, d, ops, H, D = generic(cavity_dim=3, mech_dim=4, omega_d=20.0, phi_d=math.pi)
        rho0 = tensor(fock_state(ops.cavity, 0), fock_state(ops.mech, 0)).dm()
        traj = evolve(rho0, H, D, [0.0, 0.1], H_time=h_nr_term(p, d, ops))
        assert traj.step <= (math.pi / p.omega_d) / 40 + 1e-15

    def test_truncation_leak(self):
        s = TruncatedSpace(4)
        a = destroy(s)
        D = DissipatorSpec((Channel(a.dag(), 1.0, NORMAL),))  # pure heating
        with pytest.raises(TruncationLeak):
            evolve(fock_state(s, 0), 0 * number(s), D, [0.0, 5.0])

    def test_rejects_unordered_grid(self):
        s, H, D = cavity_only()
        with pytest.raises(ValueError):
            evolve(fock_state(s, 0), H, D, [0.0, 1.0, 0.5])
