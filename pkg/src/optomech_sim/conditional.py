"""Undriven optomechanical dynamics in photon-number-conditioned displaced frames.

Without a probe the photon number changes only through cavity decay, and for a
fixed photon number ``n`` the mechanical mode feels a constant force. Each
mechanical block ``rho_{nn'}`` of the joint state is therefore written in the
frame displaced by the classical trajectory

    gamma_n(t) = k n + (beta - k n) exp(-i w t),      k = g_tilde / w,

and in the interaction picture of the free mechanical rotation ``w b†b``. In
that frame every block stays close to the mechanical vacuum, so a handful of
mechanical levels suffice even when the lab-frame displacement ``2 k n`` is far
larger than the truncation could hold. What remains of the generator is

* the c-number phase ``w k n Re gamma_n``, integrated in closed form,
* cavity decay, which maps block ``(n+1, n'+1)`` onto ``(n, n')`` through the
  fixed displacement ``D(k (exp(i w t) - 1))``,
* the mechanical channels with ``b -> b exp(-i w t) + gamma_n`` on the left and
  ``gamma_n'`` on the right.

At ``t = 2 pi / w`` all trajectories return to ``beta`` and the cavity state is
a plain partial trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import TruncationLeak, TruncationTooSmall
from .fock import (
    LEAKAGE_TOL,
    DensityMatrix,
    Displacer,
    TruncatedSpace,
    coherent_amplitudes,
)
from .model import DerivedParams, SystemParams


@dataclass(frozen=True)
class ConditionalOptions:
    mech_dim: int = 15
    safety: float = 3.0
    steps_per_period: int = 200
    leak_tol: float = 1e-3
    leakage_tol: float = LEAKAGE_TOL


@dataclass
class ConditionalResult:
    time: float
    cavity: DensityMatrix
    steps: int
    step: float
    mech_top_population: float
    cavity_top_population: float
    trace: float


class _Frames:
    """Trajectories ``gamma_n(t)`` and integrated phases ``theta_n(t)``."""

    def __init__(self, n: np.ndarray, k: float, w: float, beta: complex):
        self.n, self.k, self.w, self.beta = n, k, w, complex(beta)
        self.kn = k * n

    def gamma(self, t: float) -> np.ndarray:
        return self.kn + (self.beta - self.kn) * np.exp(-1j * self.w * t)

    def theta(self, t: float) -> np.ndarray:
        w = self.w
        osc = ((self.beta - self.kn) * (1 - np.exp(-1j * w * t)) / (1j * w)).real
        return w * self.kn * (self.kn * t + osc)


def _lower_left(x, sq):
    """``b @ x`` on the last two axes."""
    out = np.zeros_like(x)
    out[..., :-1, :] = sq[:, None] * x[..., 1:, :]
    return out


def _raise_left(x, sq):
    """``b† @ x``."""
    out = np.zeros_like(x)
    out[..., 1:, :] = sq[:, None] * x[..., :-1, :]
    return out


def _lower_right(x, sq):
    """``x @ b``."""
    out = np.zeros_like(x)
    out[..., :, 1:] = x[..., :, :-1] * sq
    return out


def _raise_right(x, sq):
    """``x @ b†``."""
    out = np.zeros_like(x)
    out[..., :, :-1] = x[..., :, 1:] * sq
    return out


def _mech_channels(params: SystemParams, derived: DerivedParams):
    """``(dagger, rate, kind)`` for the four mechanical channels."""
    g = params.gamma
    if g == 0:
        return []
    chans = [(False, g * (derived.n_tilde + 1), "D"), (True, g * derived.n_tilde, "D"),
             (False, -g * derived.m_tilde, "G"), (True, -g * np.conj(derived.m_tilde), "G")]
    return [c for c in chans if c[1] != 0]


class _MechTerms:
    """All mechanical channels expanded into ladder-operator products.

    With ``o = phi B`` (``B`` one of ``b``, ``b†``) and block shifts ``s_n``,
    each channel is a sum of ``B X B'``, ``B X``, ``X B``, quadratic one-sided
    terms and c-number multiples of ``X``; the coefficients are collected once
    per evaluation so the cost does not grow with the number of channels.
    """

    def __init__(self, chans, M: int):
        self.chans = chans
        self.sq = np.sqrt(np.arange(1, M))
        b = np.diag(self.sq, 1).astype(complex)
        self.mat = {"b": b, "d": b.T.copy()}

    def coefficients(self, e: complex, g: np.ndarray):
        """Operator coefficients and the c-number part ``cx`` at one instant."""
        Nc = g.size
        ops = {"b": (e, g), "d": (np.conj(e), np.conj(g))}
        flip = {"b": "d", "d": "b"}
        pair = {}
        cl = {"b": np.zeros((Nc, Nc), complex), "d": np.zeros((Nc, Nc), complex)}
        cr = {"b": np.zeros((Nc, Nc), complex), "d": np.zeros((Nc, Nc), complex)}
        cx = np.zeros((Nc, Nc), complex)
        M = self.mat["b"].shape[0]
        ql = np.zeros((M, M), complex)
        for dagger, c, kind in self.chans:
            lo = "d" if dagger else "b"
            lp = flip[lo] if kind == "D" else lo
            po, so = ops[lo]
            pp, sp = ops[lp]
            # c (o + s_n) X (p + t_n')
            pair[(lo, lp)] = pair.get((lo, lp), 0) + c * po * pp
            cl[lo] += c * po * sp[None, :]
            cr[lp] += c * pp * so[:, None]
            cx += c * so[:, None] * sp[None, :]
            # -c/2 (q + u_n)(o + s_n) X with q = p
            ql += -0.5 * c * pp * po * (self.mat[lp] @ self.mat[lo])
            cl[lp] += -0.5 * c * pp * so[:, None]
            cl[lo] += -0.5 * c * po * sp[:, None]
            cx += -0.5 * c * (sp * so)[:, None]
            # -c/2 X (p + t_n')(o + s_n'); same quadratic matrix on the right
            cr[lp] += -0.5 * c * pp * so[None, :]
            cr[lo] += -0.5 * c * po * sp[None, :]
            cx += -0.5 * c * (sp * so)[None, :]
        return pair, cl, cr, ql, cx

    def scalar(self, e: complex, g: np.ndarray) -> np.ndarray:
        if not self.chans:
            return np.zeros((g.size, g.size), complex)
        return self.coefficients(e, g)[4]

    def operator_norm(self, e: complex, g: np.ndarray) -> float:
        """Bound on the operator part (everything but ``cx``) at one instant."""
        if not self.chans:
            return 0.0
        pair, cl, cr, ql, _ = self.coefficients(e, g)
        M = self.mat["b"].shape[0]
        lin = sum(np.abs(v).max() for v in (*cl.values(), *cr.values()))
        return (lin * math.sqrt(M - 1) + sum(abs(c) for c in pair.values()) * (M - 1)
                + 2 * np.abs(ql).sum(axis=1).max())

    def __call__(self, x: np.ndarray, e: complex, g: np.ndarray) -> np.ndarray:
        """Operator part of the mechanical generator applied to every block."""
        if not self.chans:
            return np.zeros_like(x)
        pair, cl, cr, ql, _ = self.coefficients(e, g)
        sq = self.sq
        bx, dx = _lower_left(x, sq), _raise_left(x, sq)
        out = (cl["b"][:, :, None, None] * bx + cl["d"][:, :, None, None] * dx
               + cr["b"][:, :, None, None] * _lower_right(x, sq)
               + cr["d"][:, :, None, None] * _raise_right(x, sq)
               + np.matmul(ql, x) + np.matmul(x, ql))
        right = {"b": _lower_right, "d": _raise_right}
        for (lo, lp), c in pair.items():
            out += c * right[lp](bx if lo == "b" else dx, sq)
        return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


def evolve_conditional(params: SystemParams, derived: DerivedParams, alpha: complex,
                       beta: complex, cavity_dim: int, t_final: float,
                       opts: Optional[ConditionalOptions] = None,
                       cavity_decay: Optional[float] = None) -> ConditionalResult:
    """Evolve ``|alpha> (x) |beta>`` under the undriven interaction for a time ``t_final``.

    The Hamiltonian is ``w b†b - g_tilde a†a (b + b†)`` (no cavity free term,
    no probe) with cavity decay ``kappa`` and the squeezed mechanical bath of
    ``derived``. ``cavity_decay`` replaces ``params.kappa`` (zero gives the
    lossless cavity). Returns the reduced cavity state.
    """
    opts = opts or ConditionalOptions()
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    M, Nc = opts.mech_dim, cavity_dim
    if M < 2 or Nc < 2:
        raise TruncationTooSmall("both truncations need at least two levels")
    w, k = derived.omega_m_tilde, derived.k_ratio
    n = np.arange(Nc)
    fr = _Frames(n.astype(float), k, w, beta)

    c = coherent_amplitudes(Nc, alpha)
    leak = 1.0 - float(np.sum(np.abs(c) ** 2))
    if leak > opts.leakage_tol:
        raise TruncationTooSmall(
            f"cavity dimension {Nc} discards {leak:.3e} of |alpha={alpha}>; raise it"
        )
    c = c / np.linalg.norm(c)
    y = np.zeros((Nc, Nc, M, M), dtype=complex)
    y[:, :, 0, 0] = np.outer(c, c.conj())

    chans = _mech_channels(params, derived)
    mech = _MechTerms(chans, M)
    kappa = params.kappa if cavity_decay is None else float(cavity_decay)
    decay = 0.5 * kappa * (n[:, None] + n[None, :])
    feed = kappa * np.sqrt(np.outer(n[1:], n[1:]))
    disp = Displacer(M + int(math.ceil(4 * k * k + 8 * k)) + 12)

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        """Everything except the block-scalar rates, which the integrating factor carries."""
        e = np.exp(-1j * w * t)
        out = mech(x, e, fr.gamma(t))
        if kappa:
            g = fr.gamma(t)
            th = fr.theta(t)
            ph = np.exp(1j * ((np.conj(g[:-1]) * g[1:]).imag + th[1:] - th[:-1]))
            D = disp.block(k * (1 / e - 1), M)
            blk = np.matmul(np.matmul(D, x[1:, 1:]), D.conj().T)
            out[:-1, :-1] += (feed * np.outer(ph, ph.conj()))[:, :, None, None] * blk
        return out

    def scalar_integral(t0: float, t1: float) -> np.ndarray:
        half, mid = 0.5 * (t1 - t0), 0.5 * (t1 + t0)
        acc = np.zeros((Nc, Nc), complex)
        for x_, w_ in zip(_GL_NODES, _GL_WEIGHTS):
            s = mid + half * x_
            acc += w_ * mech.scalar(np.exp(-1j * w * s), fr.gamma(s))
        return half * acc - (t1 - t0) * decay

    period = 2 * math.pi / w
    samples = np.linspace(0.0, period, 33)
    norm = kappa * (Nc - 1) + max(
        mech.operator_norm(np.exp(-1j * w * s), fr.gamma(s)) for s in samples)
    h_max = min(opts.safety / norm if norm > 0 else math.inf, period / opts.steps_per_period)
    n_steps = max(1, math.ceil(t_final / h_max - 1e-9)) if t_final > 0 else 0
    h = t_final / n_steps if n_steps else 0.0
    t = 0.0
    for i in range(n_steps):
        # Lawson RK4 with the exact block-scalar propagator
        f1 = np.exp(scalar_integral(t, t + h / 2))[:, :, None, None]
        f2 = f1 * np.exp(scalar_integral(t + h / 2, t + h))[:, :, None, None]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, f1 * (y + (h / 2) * k1)) / f1
        k3 = rhs(t + h / 2, f1 * (y + (h / 2) * k2)) / f1
        k4 = rhs(t + h, f2 * (y + h * k3)) / f2
        y = f2 * (y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4))
        t = (i + 1) * h
    t = t_final

    diag = np.einsum("nnij->nij", y)
    mech_pop = np.real(np.einsum("nii->i", diag))
    cav_pop = np.real(np.einsum("nii->n", diag))
    total = float(mech_pop.sum())
    mech_top = float(mech_pop[-2:].sum() / total)
    cav_top = float(cav_pop[-1] / total)
    if mech_top > opts.leak_tol:
        raise TruncationLeak(
            f"displaced-frame mechanics holds {mech_top:.3e} of its population in the top "
            f"two levels (limit {opts.leak_tol:g}); raise mech_dim above {M}"
        )

    g = fr.gamma(t)
    th = fr.theta(t)
    delta = g[:, None] - g[None, :]
    rho = np.empty((Nc, Nc), dtype=complex)
    if np.max(np.abs(delta)) < 1e-12:
        rho[:] = np.einsum("abii->ab", y)
    else:
        big = Displacer(M + int(math.ceil(np.max(np.abs(delta)) ** 2
                                          + 4 * np.max(np.abs(delta)))) + 12)
        rot = np.exp(1j * w * t)
        for i in range(Nc):
            for j in range(Nc):
                D = big.block(delta[i, j] * rot, M)
                rho[i, j] = np.sum(y[i, j] * D.T)
    rho *= np.exp(1j * (th[:, None] - th[None, :] + (np.conj(g)[None, :] * g[:, None]).imag))
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.trace(rho).real)
    cav = DensityMatrix(TruncatedSpace(Nc, "cavity"), rho / tr, check=True, pos_tol=1e-6)
    return ConditionalResult(time=t, cavity=cav, steps=n_steps, step=h,
                             mech_top_population=mech_top, cavity_top_population=cav_top,
                             trace=tr)


def cat_time(derived: DerivedParams) -> float:
    """One period of the transformed mechanical mode, ``2 pi / omega_m_tilde``."""
    return 2 * math.pi / derived.omega_m_tilde
