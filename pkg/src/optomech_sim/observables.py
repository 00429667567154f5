"""Photon statistics and phase-space diagnostics of the cavity mode."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PadTooSmall, SpaceMismatch, VacuumDivergence
from .fock import (
    LEAKAGE_TOL,
    DensityMatrix,
    Displacer,
    PureState,
    StateLike,
    TruncatedSpace,
    _guard_leakage,
    as_composite,
    as_density,
    coherent_amplitudes,
    partial_trace,
)

G2_FLOOR = 1e-8

# W(x, y) = WIGNER_NORM * Tr[P D(alpha)^† rho D(alpha)], alpha = x + i y, P = parity.
# With x = (a + a†)/2, y = -i(a - a†)/2 this gives W_vac(0) = 2/pi and
# a unit integral over dx dy.
WIGNER_NORM = 2.0 / math.pi


def photon_moments(rho: StateLike, label: str = "cavity") -> tuple[float, float]:
    """``(<a†a>, <a†a†aa>)`` of the named mode."""
    rho = as_density(rho)
    red = rho if len(rho.space.slots) == 1 else partial_trace(rho, label)
    p = np.real(np.diag(red.data))
    n = np.arange(p.size)
    return float(np.dot(n, p)), float(np.dot(n * (n - 1), p))


def g2_from_moments(n1: float, n2: float, floor: float = G2_FLOOR) -> float:
    if not n1 > floor:
        raise VacuumDivergence(
            f"<a†a> = {n1:.3e} is below the floor {floor:g}; g2(0) is undefined"
        )
    return n2 / (n1 * n1)


def g2_zero(rho: StateLike, label: str = "cavity", floor: float = G2_FLOOR) -> float:
    """Equal-time second-order correlation ``<a†a†aa> / <a†a>^2``."""
    n1, n2 = photon_moments(rho, label)
    return g2_from_moments(n1, n2, floor)


def state_fidelity(rho: StateLike, sigma_pure: PureState) -> float:
    """Overlap ``<psi|rho|psi>`` with a pure reference state."""
    rho = as_density(rho)
    if rho.space != sigma_pure.space:
        raise SpaceMismatch("state and reference live on different spaces")
    psi = sigma_pure.amplitudes
    return float(np.real(np.vdot(psi, rho.data @ psi)))


def kerr_cat_reference(alpha: complex, k_ratio: float, space: TruncatedSpace,
                       leakage_tol: float = LEAKAGE_TOL) -> PureState:
    """Coherent state with the Kerr phase ``exp(2 pi i k^2 n^2)`` imprinted.

    This is the cavity state after one mechanical period of lossless evolution
    under the optomechanical interaction, with ``k = g_tilde / omega_m_tilde``.
    """
    c = coherent_amplitudes(space.dim, alpha)
    leakage = max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))
    _guard_leakage(leakage, f"Kerr cat reference alpha={alpha}", leakage_tol)
    n = np.arange(space.dim, dtype=float)
    # reduce k^2 n^2 mod 1 before scaling by 2 pi to keep the phase exact for large n
    phase = np.mod(k_ratio * k_ratio * n * n, 1.0)
    return PureState(as_composite(space), c * np.exp(2j * math.pi * phase), leakage=leakage)


# --------------------------------------------------------------------------- #
#                                   Wigner                                    #
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """Wigner function sampled on a Cartesian grid, ``values[i, j] = W(x[i], y[j])``."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    pad_dim: int = 0

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.y, axis=1), self.x))

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    def negative_volume(self) -> float:
        neg = np.clip(-self.values, 0.0, None)
        return float(np.trapezoid(np.trapezoid(neg, self.y, axis=1), self.x))

    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.x[i]), float(self.y[j])


def default_axis(half_width: float = 4.0, points: int = 121) -> np.ndarray:
    return np.linspace(-half_width, half_width, points)


def _default_pad(n: int, r_max: float) -> int:
    return n + int(math.ceil(r_max ** 2 + 4 * r_max)) + 10


def wigner(rho_cav: StateLike, x: Optional[np.ndarray] = None, y: Optional[np.ndarray] = None,
           pad: Optional[int] = None, pad_tol: float = 1e-10, batch: int = 128) -> WignerGrid:
    """Wigner function of a single-mode state by displaced parity.

    ``W(alpha) = (2/pi) Tr[P D(alpha)^† rho D(alpha)]``. Displacements are
    evaluated in a padded Fock space; when ``pad`` is not given it starts at
    ``dim + r^2 + 4 r + 10`` levels (``r`` the largest grid radius) and grows
    until the boundary weight is below ``pad_tol``. An explicit ``pad`` that
    fails the check raises :class:`PadTooSmall`.
    """
    rho = as_density(rho_cav)
    if len(rho.space.slots) != 1:
        raise SpaceMismatch("wigner() needs a single-mode state; take a partial trace first")
    xs = default_axis() if x is None else np.asarray(x, dtype=float)
    ys = xs if y is None else np.asarray(y, dtype=float)
    n = rho.space.dim
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    alpha = (X + 1j * Y).ravel()
    radius = np.abs(alpha)
    theta = np.angle(alpha)
    radii, inverse = np.unique(np.round(radius, 12), return_inverse=True)
    r_max = float(radii.max()) if radii.size else 0.0

    explicit = pad is not None
    P = max(int(pad), n) if explicit else _default_pad(n, r_max)
    for _ in range(6):
        disp = Displacer(P)
        tail = disp.boundary_weight(n, r_max)
        if tail <= pad_tol:
            break
        if explicit:
            raise PadTooSmall(f"padded space of {P} levels leaks {tail:.3e} at |alpha|={r_max:.3g}")
        P *= 2
    else:
        raise PadTooSmall(f"could not find a padding for |alpha|={r_max:.3g}")

    sign = (-1.0) ** np.arange(P)
    # C[r][m, k] = rho_mk * sum_j (-1)^j conj(D_mj) D_kj
    C = np.empty((radii.size, n, n), dtype=complex)
    for s in range(0, radii.size, batch):
        rows = disp.rows(n, radii[s:s + batch])
        C[s:s + batch] = (rows.conj() * sign) @ rows.transpose(0, 2, 1) * rho.data
    vals = np.empty(alpha.size, dtype=complex)
    for s in range(0, alpha.size, 4 * batch):
        u = np.exp(1j * np.outer(theta[s:s + 4 * batch], np.arange(n)))
        vals[s:s + 4 * batch] = np.einsum("pm,pmk,pk->p", u.conj(), C[inverse[s:s + 4 * batch]], u)
    if np.max(np.abs(vals.imag)) > 1e-10 * max(1.0, np.max(np.abs(vals.real))):
        raise ArithmeticError("Wigner values acquired an imaginary part; is rho Hermitian?")
    W = WIGNER_NORM * vals.real.reshape(X.shape)
    return WignerGrid(xs, ys, W, pad_dim=P)


def wigner_vacuum(x, y) -> np.ndarray:
    """Closed-form vacuum Wigner function in the same convention."""
    X, Y = np.meshgrid(np.asarray(x, float), np.asarray(y, float), indexing="ij")
    return WIGNER_NORM * np.exp(-2 * (X ** 2 + Y ** 2))


def cavity_state(rho: StateLike, label: str = "cavity") -> DensityMatrix:
    rho = as_density(rho)
    return rho if len(rho.space.slots) == 1 else partial_trace(rho, label)
