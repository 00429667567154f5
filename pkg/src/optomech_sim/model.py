"""Physical parameters, squeezed-frame quantities and Hamiltonians.

All rates are in units of the cavity decay rate (``kappa = 1`` in every preset)
and all angles in radians. The mechanical mode appearing in the Hamiltonians is
the Bogoliubov-squeezed mode that diagonalises the parametrically amplified
oscillator; its bath is described by the effective occupation ``n_tilde`` and
two-phonon correlation ``m_tilde``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import UnstableRegime, UnsupportedPhase
from .fock import ModeOps, Operator

PHASE_TOL = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """Raw model parameters.

    ``lam`` is the parametric amplification amplitude (``lambda`` in config
    files). ``delta_m`` is the mechanical detuning from the modulation
    frequency and ``delta_c`` the cavity detuning from the probe.
    """

    kappa: float = 1.0
    gamma: float = 0.01
    g0: float = 0.5
    delta_m: float = 4000.0
    lam: float = 3999.98
    omega_d: float = 30.0
    phi_d: float = math.pi
    r_e: float = 0.0
    phi_e: float = 0.0
    eps_p: float = 0.1
    delta_c: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "gamma", "g0", "delta_m", "lam", "omega_d", "phi_d",
                     "r_e", "phi_e", "eps_p", "delta_c"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.eps_p < 0:
            raise ValueError(f"eps_p must be >= 0, got {self.eps_p}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.r_e < 0:
            raise ValueError(f"r_e must be >= 0, got {self.r_e}")

    @property
    def delta(self) -> float:
        """Distance to the instability threshold, ``delta_m - lambda``."""
        return self.delta_m - self.lam

    @property
    def phi(self) -> float:
        """Bath phase relative to the amplification phase."""
        return self.phi_e - self.phi_d

    @classmethod
    def from_delta(cls, delta_m: float, delta: float, **kw) -> "SystemParams":
        return cls(delta_m=delta_m, lam=delta_m - delta, **kw)

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


def squeeze_param(delta_m: float, lam: float) -> float:
    """Squeezing ``r_d = ln[(delta_m + lam) / (delta_m - lam)] / 4``."""
    if not delta_m > lam:
        raise UnstableRegime(
            f"parametric amplification is unstable for delta_m={delta_m} <= lambda={lam}"
        )
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    # log1p keeps precision when lam << delta_m
    return 0.25 * math.log1p(2 * lam / (delta_m - lam))


def effective_coupling(g0: float, r_d: float) -> float:
    if g0 < 0:
        raise ValueError(f"g0 must be >= 0, got {g0}")
    return 0.5 * g0 * math.exp(r_d)


def transformed_frequency(delta_m: float, r_d: float) -> float:
    if delta_m <= 0:
        raise ValueError(f"delta_m must be > 0, got {delta_m}")
    return delta_m / math.cosh(2 * r_d)


def _unit_phase(angle: float) -> complex:
    """``exp(i angle)`` with float multiples of pi/2 mapped to exact values."""
    quarter = angle / (0.5 * math.pi)
    q = round(quarter)
    if abs(quarter - q) < PHASE_TOL:
        return (1, 1j, -1, -1j)[q % 4]
    return complex(math.cos(angle), math.sin(angle))


def bath_params(r_e: float, phi_e: float, r_d: float, phi_d: float) -> tuple[float, complex]:
    """Effective thermal noise and two-phonon correlation of the squeezed mode.

    The occupation is evaluated as ``|sinh r_e cosh r_d + e^{i phi} cosh r_e sinh r_d|^2``,
    algebraically identical to the expanded three-term form but free of the
    cancellation error that form suffers at phase matching.
    """
    if r_e < 0 or r_d < 0:
        raise ValueError("squeezing parameters must be >= 0")
    u = _unit_phase(phi_e - phi_d)
    ce, se = math.cosh(r_e), math.sinh(r_e)
    cd, sd = math.cosh(r_d), math.sinh(r_d)
    n_tilde = abs(se * cd + u * ce * sd) ** 2
    m_tilde = _unit_phase(phi_d) * (ce * cd + u.conjugate() * se * sd) * (ce * sd + u * se * cd)
    return float(n_tilde), complex(m_tilde)


def bath_params_expanded(r_e: float, phi_e: float, r_d: float, phi_d: float) -> float:
    """Occupation from the expanded three-term expression (cross-check only)."""
    phi = phi_e - phi_d
    return (math.sinh(r_e) ** 2 * math.cosh(r_d) ** 2
            + math.sinh(r_d) ** 2 * math.cosh(r_e) ** 2
            + 0.5 * math.cos(phi) * math.sinh(2 * r_e) * math.sinh(2 * r_d))


def physical_bath_r(n_tilde: float) -> float:
    """Squeezing of a pure squeezed vacuum with occupation ``n_tilde``."""
    return math.asinh(math.sqrt(max(n_tilde, 0.0)))


@dataclass(frozen=True)
class DerivedParams:
    r_d: float
    g_tilde: float
    omega_m_tilde: float
    n_tilde: float
    m_tilde: complex
    phi: float
    delta_c_resonance: float

    @classmethod
    def from_params(cls, p: SystemParams) -> "DerivedParams":
        r_d = squeeze_param(p.delta_m, p.lam)
        g_t = effective_coupling(p.g0, r_d)
        w_t = transformed_frequency(p.delta_m, r_d)
        n_t, m_t = bath_params(p.r_e, p.phi_e, r_d, p.phi_d)
        return cls(r_d=r_d, g_tilde=g_t, omega_m_tilde=w_t, n_tilde=n_t, m_tilde=m_t,
                   phi=p.phi, delta_c_resonance=g_t * g_t / w_t)

    @property
    def k_ratio(self) -> float:
        """``g_tilde / omega_m_tilde``."""
        return self.g_tilde / self.omega_m_tilde

    def as_dict(self) -> dict:
        d = asdict(self)
        d["m_tilde_re"] = self.m_tilde.real
        d["m_tilde_im"] = self.m_tilde.imag
        del d["m_tilde"]
        d["k_ratio"] = self.k_ratio
        return d


def matched_bath(p: SystemParams, phi: float = math.pi) -> SystemParams:
    """Bath squeezing equal to the amplification squeezing, relative phase ``phi``."""
    r_d = squeeze_param(p.delta_m, p.lam)
    return replace(p, r_e=r_d, phi_e=p.phi_d + phi)


def single_photon_resonance(p: SystemParams) -> SystemParams:
    """Set the probe detuning to ``g_tilde**2 / omega_m_tilde``."""
    return replace(p, delta_c=DerivedParams.from_params(p).delta_c_resonance)


def build_h_oms(params: SystemParams, derived: DerivedParams, ops: ModeOps,
                include_cavity_free: bool = True) -> Operator:
    """Standard optomechanical Hamiltonian in the squeezed frame plus the probe.

    With ``include_cavity_free=False`` the ``delta_c a†a`` term is dropped, which
    is the interaction-picture form used for cat-state generation.
    """
    a, b = ops.a, ops.b
    h = derived.omega_m_tilde * ops.n_b - derived.g_tilde * (ops.n_a @ (b + b.dag()))
    if include_cavity_free:
        h = h + params.delta_c * ops.n_a
    if params.eps_p:
        h = h + params.eps_p * (a + a.dag())
    return h


def h_nr_component(params: SystemParams, derived: DerivedParams, ops: ModeOps) -> Operator:
    """Operator ``X`` with ``H_nr(t) = X exp(-2i wd t) + X† exp(2i wd t)``."""
    if abs(math.remainder(params.phi_d - math.pi, 2 * math.pi)) > PHASE_TOL:
        raise UnsupportedPhase(
            f"the counter-rotating term is only defined for phi_d = pi (got {params.phi_d})"
        )
    b = ops.b
    r = derived.r_d
    return -0.5 * params.g0 * (ops.n_a @ (math.cosh(r) * b - math.sinh(r) * b.dag()))


def build_h_nr(params: SystemParams, derived: DerivedParams, ops: ModeOps, t: float) -> Operator:
    x = h_nr_component(params, derived, ops)
    ph = np.exp(-2j * params.omega_d * t)
    return ph * x + np.conj(ph) * x.dag()


@dataclass(frozen=True)
class RWAReport:
    omega_d_over_omega_m: float
    omega_d_over_g0_cosh: float
    omega_d_over_g0_sinh: float
    threshold: float = 2.0
    ok: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ok", min(self.ratios) > self.threshold)

    @property
    def ratios(self) -> tuple[float, float, float]:
        return (self.omega_d_over_omega_m, self.omega_d_over_g0_cosh,
                self.omega_d_over_g0_sinh)

    def as_dict(self) -> dict:
        return asdict(self)


def _ratio(num: float, den: float) -> float:
    return math.inf if den == 0 else num / den


def rwa_report(params: SystemParams, derived: DerivedParams, threshold: float = 2.0) -> RWAReport:
    """How strongly the modulation frequency dominates the rates dropped by the RWA."""
    wd = params.omega_d
    return RWAReport(
        _ratio(wd, derived.omega_m_tilde),
        _ratio(wd, params.g0 * math.cosh(derived.r_d)),
        _ratio(wd, params.g0 * math.sinh(derived.r_d)),
        threshold=threshold,
    )
