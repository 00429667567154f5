"""Lindblad dynamics with normal and anomalous (two-phonon) dissipators.

The master equation is

    drho/dt = -i[H, rho] + sum_k c_k (A_k rho B_k - (B_k A_k rho + rho B_k A_k) / 2)

where a normal channel ``c D[o]`` has ``A = o, B = o†`` and an anomalous
channel ``c G[o]`` has ``A = B = o``. Superoperator matrices use column
stacking, ``vec(X)[i + d*j] = X[i, j]``, so that ``vec(A X B) = (B^T ⊗ A) vec(X)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DimensionTooLarge,
    SingularSystem,
    SpaceMismatch,
    StepRejected,
    TruncationLeak,
)
from .fock import DensityMatrix, ModeOps, Operator, StateLike, as_density
from .model import DerivedParams, SystemParams, h_nr_component

log = logging.getLogger(__name__)

NORMAL = "D"
ANOMALOUS = "G"

MAX_STEADY_DIM = 400


@dataclass(frozen=True)
class Channel:
    op: Operator
    rate: complex
    kind: str = NORMAL

    def __post_init__(self):
        if self.kind not in (NORMAL, ANOMALOUS):
            raise ValueError(f"channel kind must be 'D' or 'G', got {self.kind!r}")
        if self.kind == NORMAL:
            r = complex(self.rate)
            if abs(r.imag) > 0 or r.real < 0:
                raise ValueError(f"normal channel rates must be real and >= 0, got {self.rate}")

    @property
    def left(self) -> np.ndarray:
        return self.op.data

    @property
    def right(self) -> np.ndarray:
        return self.op.data.conj().T if self.kind == NORMAL else self.op.data


@dataclass(frozen=True)
class DissipatorSpec:
    channels: tuple[Channel, ...] = ()

    def __post_init__(self):
        chans = tuple(self.channels)
        object.__setattr__(self, "channels", chans)
        spaces = {c.op.space for c in chans}
        if len(spaces) > 1:
            raise SpaceMismatch("all dissipator channels must act on one space")
        anomalous = [c for c in chans if c.kind == ANOMALOUS]
        for c in anomalous:
            partner = [p for p in anomalous
                       if np.allclose(p.op.data, c.op.data.conj().T, rtol=0,
                                      atol=1e-12 * max(1.0, np.abs(c.op.data).max()))
                       and np.isclose(p.rate, np.conj(c.rate), rtol=1e-12, atol=0)]
            if not partner:
                raise ValueError("anomalous channels must come in conjugate pairs "
                                 "(c G[o], c* G[o†])")

    @property
    def space(self):
        return self.channels[0].op.space if self.channels else None

    def __iter__(self):
        return iter(self.channels)

    def __len__(self):
        return len(self.channels)


def optomech_dissipators(params: SystemParams, derived: DerivedParams, ops: ModeOps,
                         drop_zero: bool = True) -> DissipatorSpec:
    """Cavity decay plus the squeezed-bath channels of the mechanical mode."""
    a, b = ops.a, ops.b
    g = params.gamma
    chans = [
        Channel(a, params.kappa, NORMAL),
        Channel(b, g * (derived.n_tilde + 1), NORMAL),
        Channel(b.dag(), g * derived.n_tilde, NORMAL),
        Channel(b, -g * derived.m_tilde, ANOMALOUS),
        Channel(b.dag(), -g * np.conj(derived.m_tilde), ANOMALOUS),
    ]
    if drop_zero:
        chans = [c for c in chans if c.rate != 0]
    return DissipatorSpec(tuple(chans))


def _raw(x):
    if isinstance(x, (Operator, DensityMatrix)):
        return x.data
    return np.asarray(x)


def apply_dissipator(kind: str, o: Operator, rho) -> np.ndarray:
    """``D[o] rho`` (kind ``'D'``) or ``G[o] rho`` (kind ``'G'``)."""
    r = _raw(rho)
    if isinstance(rho, DensityMatrix) and rho.space != o.space:
        raise SpaceMismatch("operator and state live on different spaces")
    if r.shape != o.data.shape:
        raise SpaceMismatch(f"state shape {r.shape} vs operator {o.data.shape}")
    ch = Channel(o, 1.0, kind)
    A, B = ch.left, ch.right
    BA = B @ A
    return A @ r @ B - 0.5 * (BA @ r + r @ BA)


def _as_fast(m: np.ndarray, dim_threshold: int = 48, density: float = 0.2):
    """Sparse CSR for large, mostly-empty matrices; dense otherwise."""
    if m.shape[0] < dim_threshold:
        return np.ascontiguousarray(m)
    nnz = np.count_nonzero(m)
    if nnz <= density * m.size:
        return sp.csr_array(m)
    return np.ascontiguousarray(m)


def _right(x: np.ndarray, m) -> np.ndarray:
    """``x @ m`` for dense ``x`` and dense or sparse ``m``."""
    if sp.issparse(m):
        return (m.T @ x.T).T
    return x @ m


@dataclass(frozen=True)
class TimeDependentTerm:
    """Hermitian drive ``X exp(-i w t) + X† exp(i w t)``."""

    op: Operator
    omega: float

    @property
    def period(self) -> float:
        return 2 * math.pi / abs(self.omega) if self.omega else math.inf

    def at(self, t: float) -> Operator:
        ph = np.exp(-1j * self.omega * t)
        return ph * self.op + np.conj(ph) * self.op.dag()


def h_nr_term(params: SystemParams, derived: DerivedParams, ops: ModeOps) -> TimeDependentTerm:
    """Counter-rotating correction oscillating at twice the modulation frequency."""
    return TimeDependentTerm(h_nr_component(params, derived, ops), 2 * params.omega_d)


class _Generator:
    """Matrix-free right-hand side with precomputed operator products."""

    def __init__(self, H: Optional[Operator], diss: DissipatorSpec,
                 h_time: Optional[TimeDependentTerm] = None, dim: Optional[int] = None):
        space = None
        for obj in [H, h_time.op if h_time else None, *(c.op for c in diss)]:
            if obj is None:
                continue
            if space is None:
                space = obj.space
            elif obj.space != space:
                raise SpaceMismatch("Hamiltonian and dissipators act on different spaces")
        self.space = space
        d = space.dim if space is not None else dim
        self.dim = d
        h = H.data if H is not None else np.zeros((d, d), dtype=complex)
        anti = np.zeros((d, d), dtype=complex)
        self.jumps = []
        for c in diss:
            A, B = c.left, c.right
            anti += complex(c.rate) * (B @ A)
            self.jumps.append((complex(c.rate), _as_fast(A), _as_fast(B)))
        self.k_left = _as_fast(-1j * h - 0.5 * anti)
        self.k_right = _as_fast(1j * h - 0.5 * anti)
        self.h_time = h_time
        if h_time is not None:
            self.x = _as_fast(h_time.op.data)
            self.xd = _as_fast(h_time.op.data.conj().T)

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        out = self.k_left @ rho + _right(rho, self.k_right)
        for c, A, B in self.jumps:
            out += c * _right(A @ rho, B)
        if self.h_time is not None:
            ph = np.exp(-1j * self.h_time.omega * t)
            ht_rho = ph * (self.x @ rho) + np.conj(ph) * (self.xd @ rho)
            rho_ht = ph * _right(rho, self.x) + np.conj(ph) * _right(rho, self.xd)
            out += -1j * (ht_rho - rho_ht)
        return out

    def norm_estimate(self) -> float:
        """Upper bound on the 1-norm of the generator acting on matrices."""
        def n1(m):
            if sp.issparse(m):
                return float(abs(m).sum(axis=0).max())
            return float(np.abs(m).sum(axis=0).max())
        est = n1(self.k_left) + n1(self.k_right)
        for c, A, B in self.jumps:
            est += abs(c) * n1(A) * n1(B)
        if self.h_time is not None:
            est += 2 * (n1(self.x) + n1(self.xd))
        return est


def liouvillian_apply(H: Optional[Operator], diss: DissipatorSpec, rho) -> np.ndarray:
    """Right-hand side of the master equation, evaluated without a superoperator."""
    r = _raw(rho)
    gen = _Generator(H, diss, dim=r.shape[0])
    if gen.space is not None:
        if isinstance(rho, DensityMatrix) and rho.space != gen.space:
            raise SpaceMismatch("state and generator act on different spaces")
        if r.shape != (gen.dim, gen.dim):
            raise SpaceMismatch(f"state shape {r.shape} vs generator dim {gen.dim}")
    return gen(0.0, np.asarray(r, dtype=complex))


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, d: Optional[int] = None) -> np.ndarray:
    if d is None:
        d = math.isqrt(v.size)
    return np.asarray(v).reshape((d, d), order="F")


def liouvillian_matrix(H: Optional[Operator], diss: DissipatorSpec,
                       max_dim: int = MAX_STEADY_DIM, sparse: bool = True):
    """Explicit superoperator of the master equation (column stacking)."""
    space = H.space if H is not None else diss.space
    if space is None:
        raise ValueError("need a Hamiltonian or at least one channel to fix the space")
    d = space.dim
    if d > max_dim:
        raise DimensionTooLarge(f"space dimension {d} exceeds the limit {max_dim}")
    for c in diss:
        if c.op.space != space:
            raise SpaceMismatch("Hamiltonian and dissipators act on different spaces")
    eye = sp.identity(d, dtype=complex, format="csr")
    h = sp.csr_array(H.data) if H is not None else sp.csr_array((d, d), dtype=complex)
    L = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for c in diss:
        A = sp.csr_array(c.left)
        B = sp.csr_array(c.right)
        BA = B @ A
        L = L + complex(c.rate) * (sp.kron(B.T, A) - 0.5 * sp.kron(eye, BA)
                                   - 0.5 * sp.kron(BA.T, eye))
    L = sp.csr_array(L)
    L.eliminate_zeros()
    return L if sparse else L.toarray()


def steady_state(H: Operator, diss: DissipatorSpec, max_dim: int = MAX_STEADY_DIM,
                 residual_tol: float = 1e-8) -> DensityMatrix:
    """Null vector of the Liouvillian with unit trace.

    One row of ``L vec(rho) = 0`` is replaced by the trace condition and the
    system is solved by sparse LU. A numerically singular system signals a
    degenerate stationary manifold and is reported rather than resolved.
    """
    L = liouvillian_matrix(H, diss, max_dim=max_dim)
    d = H.space.dim
    trace_row = sp.csr_array((np.ones(d), (np.zeros(d, dtype=int), np.arange(d) * (d + 1))),
                             shape=(1, d * d))
    A = sp.vstack([trace_row, L[1:]], format="csc")
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystem(f"Liouvillian has a degenerate steady manifold: {exc}") from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("steady-state solve produced non-finite entries")
    residual = float(np.max(np.abs(L @ x)))
    if residual > residual_tol:
        raise SingularSystem(f"steady-state residual {residual:.3e} exceeds {residual_tol:g}; "
                             "the stationary state is not unique")
    rho = unvec(x, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return DensityMatrix(H.space, rho)


# --------------------------------------------------------------------------- #
#                               Time evolution                                #
# --------------------------------------------------------------------------- #


@dataclass
class StepperOptions:
    """Fixed-step integration settings.

    ``method='rk4'`` is classical Runge-Kutta on the full generator with step
    ``h <= safety / ||L||_est`` (and ``period / steps_per_period`` when a
    time-dependent term is present). ``method='lawson'`` treats a static
    Hamiltonian exactly in its eigenbasis and integrates only the dissipators
    with RK4; the step is then bounded by the dissipator norm and by
    ``phase_step`` radians of the fastest Bohr frequency.
    """

    method: str = "rk4"
    safety: float = 0.05
    steps_per_period: int = 40
    max_step: Optional[float] = None
    phase_step: float = 1.0
    store_states: bool = True
    observables: Mapping[str, Operator] = field(default_factory=dict)
    leak_check: bool = True
    leak_tol: float = 1e-3
    renorm_tol: float = 1e-10
    max_halvings: int = 10
    positivity_checks: int = 10


@dataclass
class Trajectory:
    times: np.ndarray
    states: Optional[list]
    expectations: dict
    step: float
    renormalizations: int = 0
    min_eigenvalue: float = 0.0
    max_trace_drift: float = 0.0
    max_hermiticity_error: float = 0.0

    def __len__(self):
        return len(self.times)


def _top_level_leak(rho: np.ndarray, dims: Sequence[int]) -> list[tuple[int, float]]:
    t = np.real(np.diagonal(rho)).reshape(dims)
    out = []
    for ax, dim in enumerate(dims):
        pops = t.sum(axis=tuple(i for i in range(len(dims)) if i != ax))
        out.append((ax, float(pops[-2:].sum())))
    return out


def _rk4_step(f: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + h / 2, y + (h / 2) * k1)
    k3 = f(t + h / 2, y + (h / 2) * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


class _LawsonStepper:
    """RK4 in the interaction picture of a static Hamiltonian (exact rotation)."""

    def __init__(self, H: Operator, diss: DissipatorSpec):
        h = H.data
        off = h - np.diag(np.diag(h))
        if np.count_nonzero(off) == 0:
            self.energies = np.real(np.diag(h)).copy()
            self.basis = None
        else:
            self.energies, self.basis = np.linalg.eigh(0.5 * (h + h.conj().T))
        chans = []
        for c in diss:
            op = c.op.data if self.basis is None else self.basis.conj().T @ c.op.data @ self.basis
            chans.append(Channel(Operator(c.op.space, op, check=False), c.rate, c.kind))
        self.diss_gen = _Generator(None, DissipatorSpec(tuple(chans)), dim=h.shape[0])
        self.bohr = self.energies[:, None] - self.energies[None, :]

    def to_frame(self, rho: np.ndarray) -> np.ndarray:
        return rho if self.basis is None else self.basis.conj().T @ rho @ self.basis

    def from_frame(self, rho: np.ndarray) -> np.ndarray:
        return rho if self.basis is None else self.basis @ rho @ self.basis.conj().T

    def spread(self) -> float:
        return float(self.energies.max() - self.energies.min())

    def step(self, y: np.ndarray, h: float) -> np.ndarray:
        half = np.exp(-1j * self.bohr * (h / 2))
        full = half * half
        N = self.diss_gen
        k1 = N(0, y)
        k2 = half.conj() * N(0, half * (y + (h / 2) * k1))
        k3 = half.conj() * N(0, half * (y + (h / 2) * k2))
        k4 = full.conj() * N(0, full * (y + h * k3))
        return full * (y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4))


def evolve(rho0: StateLike, H_static: Operator, diss: DissipatorSpec, t_grid,
           H_time: Optional[TimeDependentTerm] = None,
           opts: Optional[StepperOptions] = None) -> Trajectory:
    """Integrate the master equation and record the state on ``t_grid``.

    Steps are uniform inside each grid interval, so identical inputs always give
    bit-identical output. A NaN triggers step halving (at most
    ``opts.max_halvings`` times); population in the top two Fock levels of any
    mode above ``opts.leak_tol`` aborts with :class:`TruncationLeak`.
    """
    opts = opts or StepperOptions()
    rho0 = as_density(rho0)
    if rho0.space != H_static.space:
        raise SpaceMismatch("initial state and Hamiltonian act on different spaces")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a non-empty, strictly increasing 1-D array")
    dims = rho0.space.dims

    if opts.method == "rk4":
        gen = _Generator(H_static, diss, H_time)
        h_max = opts.safety / max(gen.norm_estimate(), 1e-300)
        if H_time is not None:
            h_max = min(h_max, H_time.period / opts.steps_per_period)

        def advance(y, t, h):
            return _rk4_step(gen, t, y, h)

        to_frame = from_frame = lambda r: r  # noqa: E731
    elif opts.method == "lawson":
        if H_time is not None:
            raise ValueError("the Lawson stepper needs a time-independent Hamiltonian")
        law = _LawsonStepper(H_static, diss)
        h_max = opts.safety / max(law.diss_gen.norm_estimate(), 1e-300)
        if law.spread() > 0:
            h_max = min(h_max, opts.phase_step / law.spread())

        def advance(y, t, h):
            return law.step(y, h)

        to_frame, from_frame = law.to_frame, law.from_frame
    else:
        raise ValueError(f"unknown integration method {opts.method!r}")
    if opts.max_step is not None:
        h_max = min(h_max, opts.max_step)

    obs = {k: v.data for k, v in opts.observables.items()}
    for name, o in opts.observables.items():
        if o.space != rho0.space:
            raise SpaceMismatch(f"observable {name!r} acts on a different space")
    expectations = {k: np.empty(t_grid.size, dtype=complex) for k in obs}
    states = [] if opts.store_states else None
    check_at = set(np.linspace(0, t_grid.size - 1, min(opts.positivity_checks, t_grid.size))
                   .round().astype(int).tolist()) if opts.positivity_checks else set()

    traj = Trajectory(times=t_grid.copy(), states=states, expectations=expectations, step=h_max)
    y = to_frame(np.array(rho0.data, dtype=complex))
    t = float(t_grid[0])
    min_eig = math.inf
    for i, t_next in enumerate(t_grid):
        if t_next > t:
            span = t_next - t
            n_steps = max(1, math.ceil(span / h_max - 1e-9))
            for attempt in range(opts.max_halvings + 1):
                h = span / n_steps
                z = y
                for s in range(n_steps):
                    z = advance(z, t + s * h, h)
                if np.all(np.isfinite(z)):
                    break
                n_steps *= 2
                log.warning("non-finite state near t=%.6g; halving step to %.3e", t, span / n_steps)
            else:
                raise StepRejected(f"integration diverged near t={t:.6g} after "
                                   f"{opts.max_halvings} step halvings")
            y, t = z, float(t_next)
        rho = from_frame(y)
        tr = np.trace(rho).real
        drift = abs(tr - 1)
        traj.max_trace_drift = max(traj.max_trace_drift, drift)
        if drift > opts.renorm_tol:
            log.info("renormalising trace drift %.3e at t=%.6g", drift, t)
            rho = rho / tr
            y = to_frame(rho)
            traj.renormalizations += 1
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        traj.max_hermiticity_error = max(traj.max_hermiticity_error, herm)
        if opts.leak_check:
            for ax, leak in _top_level_leak(rho, dims):
                if leak > opts.leak_tol:
                    label = rho0.space.labels[ax]
                    raise TruncationLeak(
                        f"{label} mode holds {leak:.3e} of its population in the top two "
                        f"Fock levels at t={t:.6g} (limit {opts.leak_tol:g}); raise the "
                        f"{label} dimension above {dims[ax]}"
                    )
        for k, o in obs.items():
            expectations[k][i] = np.sum(rho * o.T)
        if i in check_at:
            min_eig = min(min_eig, float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]))
        if states is not None:
            states.append(DensityMatrix(rho0.space, rho, check=False))
    traj.min_eigenvalue = min_eig if min_eig != math.inf else 0.0
    if traj.min_eigenvalue < -1e-6:
        log.warning("state lost positivity along the trajectory (min eigenvalue %.3e)",
                    traj.min_eigenvalue)
    return traj


def trace_distance(rho, sigma) -> float:
    r, s = _raw(rho), _raw(sigma)
    diff = r - s
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def validate_trajectory_state(rho: DensityMatrix, pos_tol: float = 1e-6) -> DensityMatrix:
    """Density-matrix invariants with the relaxed positivity used along trajectories."""
    return rho.validate(herm_tol=1e-9, trace_tol=1e-8, pos_tol=pos_tol)
