"""Scenario runners, one per data set.

Every runner takes a resolved :class:`ScenarioConfig` and returns a
:class:`SweepResult` whose metadata embeds the full configuration. Individual
points that fail are kept as flagged rows; only configuration-level problems
raise.
"""

from __future__ import annotations

import datetime as _dt
import functools
import math
import string
import time
from dataclasses import replace
from typing import Optional

import numpy as np

from .. import __version__
from ..conditional import ConditionalOptions, cat_time, evolve_conditional
from ..dynamics import (
    StepperOptions,
    evolve,
    h_nr_term,
    optomech_dissipators,
    steady_state,
)
from ..errors import ConfigParse, DimensionTooLarge, OptomechError
from ..fock import ModeOps, TruncatedSpace, fock_state, level_populations, tensor, thermal_state
from ..model import (
    DerivedParams,
    SystemParams,
    build_h_oms,
    effective_coupling,
    matched_bath,
    rwa_report,
    single_photon_resonance,
    squeeze_param,
    transformed_frequency,
)
from ..observables import (
    G2_FLOOR,
    default_axis,
    g2_from_moments,
    kerr_cat_reference,
    photon_moments,
    state_fidelity,
    wigner,
)
from .config import ScenarioConfig
from .pool import map_ordered
from .results import SweepResult


# --------------------------------------------------------------------------- #
#                                  helpers                                    #
# --------------------------------------------------------------------------- #


def base_params(cfg: ScenarioConfig) -> SystemParams:
    """``SystemParams`` from the ``[params]`` section, before bath and detuning rules."""
    q = cfg.params
    return SystemParams(kappa=q["kappa"], gamma=q["gamma"], g0=q["g0"], delta_m=q["delta_m"],
                        lam=q["lambda"], omega_d=q["omega_d"], phi_d=q["phi_d"],
                        r_e=q["r_e"], phi_e=q["phi_e"], eps_p=q["eps_p"],
                        delta_c=q["delta_c"] or 0.0)


def point_params(cfg: ScenarioConfig, p: SystemParams, phi: Optional[float] = None) -> SystemParams:
    """Apply the bath choice and, unless fixed, the single-photon resonance."""
    bath = cfg.params["bath"]
    if bath == "matched" or phi is not None:
        p = matched_bath(p, cfg.params["phi"] if phi is None else phi)
    elif bath == "vacuum":
        p = replace(p, r_e=0.0, phi_e=0.0)
    if cfg.params["delta_c"] is None:
        p = single_photon_resonance(p)
    return p


def _error_text(exc: Exception) -> str:
    code = getattr(exc, "code", type(exc).__name__)
    return f"{code}: {exc}"


def _metadata(cfg: ScenarioConfig, reference: Optional[SystemParams], started: float) -> dict:
    meta = {
        "scenario": cfg.scenario,
        "version": __version__,
        "config": cfg.as_dict(),
        "config_text": cfg.to_text(),
        "defaults_used": list(cfg.defaults_used),
    }
    if reference is not None:
        try:
            d = DerivedParams.from_params(reference)
            meta["reference_params"] = reference.as_dict()
            meta["derived"] = d.as_dict()
            meta["rwa_report"] = rwa_report(reference, d).as_dict()
        except OptomechError as exc:
            meta["derived_error"] = _error_text(exc)
    meta["wall_time_s"] = time.perf_counter() - started
    meta["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return meta


@functools.lru_cache(maxsize=4)
def _ops(cavity_dim: int, mech_dim: int) -> ModeOps:
    return ModeOps.build(cavity_dim, mech_dim)


def _top_populations(rho) -> tuple[float, float]:
    cav = level_populations(rho, "cavity")
    mech = level_populations(rho, "mech")
    return float(cav[-2:].sum()), float(mech[-2:].sum())


def _relax(p: SystemParams, d: DerivedParams, ops: ModeOps, H, D):
    """Evolve from the vacuum for ten of the slowest relaxation times."""
    slow = min(r for r in (p.kappa, p.gamma) if r > 0)
    rho0 = tensor(fock_state(ops.cavity, 0).dm(), fock_state(ops.mech, 0).dm())
    traj = evolve(rho0, H, D, [0.0, 10.0 / slow],
                  opts=StepperOptions(method="lawson", leak_tol=1.0))
    return traj.states[-1]


def steady_point(task) -> dict:
    """Steady-state photon statistics of one parameter point.

    ``task`` is ``(params, cavity_dim, mech_dim, leak_tol)``. Errors are
    returned in the ``error`` field rather than raised.
    """
    p, nc, nm, leak_tol = task
    out: dict = {"error": ""}
    try:
        d = DerivedParams.from_params(p)
        ops = _ops(nc, nm)
        H = build_h_oms(p, d, ops)
        D = optomech_dissipators(p, d, ops)
        try:
            rho = steady_state(H, D)
            out["method"] = "steady"
        except DimensionTooLarge:
            rho = _relax(p, d, ops, H, D)
            out["method"] = "evolve"
        n1, n2 = photon_moments(rho)
        out["n_cav"] = n1
        out["g2"] = g2_from_moments(n1, n2)
        cav_top, mech_top = _top_populations(rho)
        out["cav_top"], out["mech_top"] = cav_top, mech_top
        worst = max(cav_top, mech_top)
        if worst > leak_tol:
            mode = "cavity" if cav_top >= mech_top else "mech"
            out["error"] = (f"TruncationLeak: {mode} top-two-level population {worst:.3e} "
                            f"exceeds {leak_tol:g}")
    except OptomechError as exc:
        out["error"] = _error_text(exc)
    return out


def _local_maxima(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Interior points strictly above both (valid) neighbours."""
    flags = np.zeros(values.size, dtype=bool)
    for i in range(1, values.size - 1):
        if valid[i - 1] and valid[i] and valid[i + 1]:
            flags[i] = values[i] > values[i - 1] and values[i] > values[i + 1]
    return flags


# --------------------------------------------------------------------------- #
#                                 param map                                   #
# --------------------------------------------------------------------------- #


def run_param_map(cfg: ScenarioConfig) -> SweepResult:
    """``g_tilde(r_d)``, ``r_d(lambda)`` and ``r_d(delta_m)`` in one table.

    The ``table`` column names the map each row belongs to.
    """
    started = time.perf_counter()
    o = cfg.options
    kappa = cfg.params["kappa"]
    cols = ["table", "r_d", "lambda", "delta_m", "g0", "g_tilde", "omega_m_tilde",
            "strong_coupling"]
    res = SweepResult(cols)

    def add(table, lam, dm, g0, r=None):
        try:
            if r is None:
                r = squeeze_param(dm, lam)
            g = effective_coupling(g0, r)
            res.add(table=table, r_d=r, **{"lambda": lam}, delta_m=dm, g0=g0, g_tilde=g,
                    omega_m_tilde=transformed_frequency(dm, r), strong_coupling=g > kappa)
        except (OptomechError, ValueError) as exc:
            res.add(table=table, **{"lambda": lam}, delta_m=dm, g0=g0, error=_error_text(exc))

    g0 = o["g0"]
    dm = o["lambda_delta_m"]
    for r in np.linspace(o["r_d_min"], o["r_d_max"], o["r_d_points"]):
        add("g_tilde_vs_r_d", dm * math.tanh(2 * r), dm, g0, r=float(r))
    for lam in np.linspace(o["lambda_min"], o["lambda_max"], o["lambda_points"]):
        add("r_d_vs_lambda", float(lam), dm, g0)
    lam = o["delta_m_lambda"]
    for dm_ in np.linspace(o["delta_m_min"], o["delta_m_max"], o["delta_m_points"]):
        add("r_d_vs_delta_m", lam, float(dm_), g0)
    res.metadata = _metadata(cfg, point_params(cfg, base_params(cfg)), started)
    return res


# --------------------------------------------------------------------------- #
#                               blockade sweep                                #
# --------------------------------------------------------------------------- #

_STEADY_COLS = ["n_tilde", "delta_c", "n_cav", "g2", "cav_top", "mech_top", "method"]


def run_blockade_sweep(cfg: ScenarioConfig, threads: int = 1) -> SweepResult:
    """Steady-state ``g2(0)`` against ``g0`` at the single-photon resonance."""
    started = time.perf_counter()
    o = cfg.options
    base = base_params(cfg)
    g0s = np.linspace(o["g0_min"], o["g0_max"], o["points"])
    params = [point_params(cfg, base.with_(g0=float(g))) for g in g0s]
    tasks = [(p, cfg.cavity_dim, cfg.mech_dim, o["leak_tol"]) for p in params]
    points = map_ordered(steady_point, tasks, threads)

    cols = ["g0", "g0_over_omega_m", "g_tilde", "omega_m_tilde", "r_d", "k_ratio",
            *_STEADY_COLS, "tunneling_m", "local_max"]
    res = SweepResult(cols)
    derived = [DerivedParams.from_params(p) for p in params]
    ks = np.array([d.k_ratio for d in derived])
    g2 = np.array([pt.get("g2", math.nan) for pt in points])
    valid = np.array([not pt["error"] and math.isfinite(pt.get("g2", math.nan)) for pt in points])
    maxima = _local_maxima(g2, valid)

    step = float(np.max(np.abs(np.diff(ks)))) if ks.size > 1 else 0.0
    tunneling = np.zeros(ks.size)
    targets = {}
    for m in o["tunneling_orders"]:
        target = math.sqrt(m / 2)
        i = int(np.argmin(np.abs(ks - target)))
        if abs(ks[i] - target) <= step + 1e-12:
            tunneling[i] = m
            targets[f"{m:g}"] = {"k_target": target, "index": i, "k": float(ks[i])}

    for i, (p, d, pt) in enumerate(zip(params, derived, points)):
        res.add(g0=p.g0, g0_over_omega_m=p.g0 / p.delta_m, g_tilde=d.g_tilde,
                omega_m_tilde=d.omega_m_tilde, r_d=d.r_d,
                k_ratio=d.k_ratio, n_tilde=d.n_tilde, delta_c=p.delta_c,
                n_cav=pt.get("n_cav", math.nan), g2=pt.get("g2", math.nan),
                cav_top=pt.get("cav_top", math.nan), mech_top=pt.get("mech_top", math.nan),
                method=pt.get("method", ""), tunneling_m=tunneling[i],
                local_max=bool(maxima[i]), error=pt["error"])

    meta = _metadata(cfg, params[len(params) // 2] if params else None, started)
    meta["k_step"] = step
    meta["tunneling_points"] = targets
    meta["local_maxima_k"] = [float(k) for k in ks[maxima]]
    if valid.any():
        j = int(np.nanargmin(np.where(valid, g2, np.nan)))
        meta["g2_min"] = float(g2[j])
        meta["g2_min_g0"] = float(g0s[j])
    res.metadata = meta
    return res


# --------------------------------------------------------------------------- #
#                                 RWA check                                   #
# --------------------------------------------------------------------------- #


def _rwa_trajectory(task) -> dict:
    p, nc, nm, nbar, tg, with_nr, safety, spp = task
    d = DerivedParams.from_params(p)
    ops = _ops(nc, nm)
    H = build_h_oms(p, d, ops)
    D = optomech_dissipators(p, d, ops)
    rho0 = tensor(thermal_state(ops.cavity, nbar), fock_state(ops.mech, 0).dm())
    n = ops.n_a
    opts = StepperOptions(safety=safety, steps_per_period=spp, store_states=False,
                          observables={"n": n, "n2": n @ n - n})
    traj = evolve(rho0, H, D, tg, H_time=h_nr_term(p, d, ops) if with_nr else None, opts=opts)
    return {"n": traj.expectations["n"].real, "n2": traj.expectations["n2"].real,
            "step": traj.step, "min_eigenvalue": traj.min_eigenvalue}


def _g2_curve(n: np.ndarray, n2: np.ndarray) -> np.ndarray:
    out = np.full(n.shape, np.nan)
    ok = n > G2_FLOOR
    out[ok] = n2[ok] / n[ok] ** 2
    return out


def plateau_time(t: np.ndarray, g2: np.ndarray, threshold: float, mode: str = "relative",
                 start: float = 0.0) -> float:
    """Earliest time from which ``|d g2/dt|`` (or ``|d ln g2/dt|``) stays below ``threshold``.

    NaN when the curve is still moving at the last sample.
    """
    m = (t >= start) & np.isfinite(g2)
    tt, y = t[m], g2[m]
    if tt.size < 3:
        return math.nan
    if mode == "relative":
        y = np.log(y)
    slope = np.abs(np.gradient(y, tt))
    moving = np.nonzero(slope >= threshold)[0]
    if moving.size == 0:
        return float(tt[0])
    if moving[-1] == tt.size - 1:
        return math.nan
    return float(tt[moving[-1] + 1])


def oscillation_spectrum(t: np.ndarray, y: np.ndarray, above: float) -> tuple[float, float]:
    """Dominant angular frequency above ``above`` and its prominence over the median.

    The slow relaxation is removed by a cubic fit and the record is Hann
    windowed before the transform.
    """
    m = np.isfinite(y)
    t, y = t[m], y[m]
    resid = y - np.polyval(np.polyfit(t, y, 3), t)
    amp = np.abs(np.fft.rfft(resid * np.hanning(resid.size)))
    omega = 2 * math.pi * np.fft.rfftfreq(resid.size, t[1] - t[0])
    sel = omega > above
    if not sel.any():
        return math.nan, math.nan
    i = int(np.argmax(np.where(sel, amp, -1.0)))
    median = float(np.median(amp[sel]))
    return float(omega[i]), float(amp[i] / median) if median > 0 else math.inf


def run_rwa_check(cfg: ScenarioConfig, threads: int = 1) -> SweepResult:
    """Transient ``g2(0)(t)`` with and without the counter-rotating term."""
    started = time.perf_counter()
    o = cfg.options
    p = point_params(cfg, base_params(cfg))
    n_t = int(round(o["t_max"] / o["dt"]))
    if n_t < 1:
        raise ConfigParse("rwa_check: t_max must exceed dt", key="t_max", line=0)
    tg = np.linspace(0.0, n_t * o["dt"], n_t + 1)
    tasks = [(p, cfg.cavity_dim, cfg.mech_dim, o["initial_cavity_nbar"], tg, nr,
              o["safety"], o["steps_per_period"]) for nr in (False, True)]
    oms, tot = map_ordered(_rwa_trajectory, tasks, threads)
    g_oms = _g2_curve(oms["n"], oms["n2"])
    g_tot = _g2_curve(tot["n"], tot["n2"])
    rel = np.abs(g_oms - g_tot) / g_oms

    res = SweepResult(["t", "g2_oms", "g2_tot", "rel_dev", "n_oms", "n_tot"])
    for i, t in enumerate(tg):
        res.add(t=t, g2_oms=g_oms[i], g2_tot=g_tot[i], rel_dev=rel[i], n_oms=oms["n"][i],
                n_tot=tot["n"][i])

    win = (tg >= o["window_start"]) & (tg <= o["window_end"]) & np.isfinite(rel)
    two_wd = 2 * p.omega_d
    peak, prominence = oscillation_spectrum(tg[tg >= o["window_start"]],
                                            g_tot[tg >= o["window_start"]], p.omega_d)
    bin_width = 2 * math.pi / (tg[-1] - o["window_start"]) if tg[-1] > o["window_start"] else math.inf
    metrics = {
        "mean_rel_dev": float(np.mean(rel[win])) if win.any() else math.nan,
        "max_rel_dev": float(np.max(rel[win])) if win.any() else math.nan,
        "plateau_time": plateau_time(tg, g_oms, o["plateau_threshold"], o["plateau_mode"],
                                     o["window_start"]),
        "plateau_time_absolute": plateau_time(tg, g_oms, o["plateau_threshold"], "absolute",
                                              o["window_start"]),
        "spectral_peak_omega": peak,
        "spectral_peak_prominence": prominence,
        "two_omega_d": two_wd,
        "has_two_omega_d_component": bool(abs(peak - two_wd) <= 2 * bin_width
                                           and prominence >= 100),
        "step_oms": oms["step"],
        "step_tot": tot["step"],
        "min_eigenvalue": min(oms["min_eigenvalue"], tot["min_eigenvalue"]),
    }
    if o["steady_check"]:
        ss = steady_point((p, cfg.cavity_dim, cfg.mech_dim, 1.0))
        metrics["steady_g2"] = ss.get("g2", math.nan)
        metrics["final_g2_oms"] = float(g_oms[-1])
        metrics["steady_rel_diff"] = abs(metrics["final_g2_oms"] - metrics["steady_g2"]) / metrics["steady_g2"]
    meta = _metadata(cfg, p, started)
    meta["metrics"] = metrics
    meta["initial_cavity_nbar"] = o["initial_cavity_nbar"]
    res.metadata = meta
    return res


# --------------------------------------------------------------------------- #
#                                phase sweep                                  #
# --------------------------------------------------------------------------- #


def run_phase_sweep(cfg: ScenarioConfig, threads: int = 1) -> SweepResult:
    """Steady-state ``g2(0)`` against the bath phase with ``r_e = r_d``."""
    started = time.perf_counter()
    o = cfg.options
    base = base_params(cfg)
    phis = np.linspace(o["phi_min"], o["phi_max"], o["points"])
    params = [point_params(cfg, base, phi=float(f)) for f in phis]
    tasks = [(p, cfg.cavity_dim, cfg.mech_dim, o["leak_tol"]) for p in params]
    points = map_ordered(steady_point, tasks, threads)

    cols = ["phi", "r_d", "r_e", "m_tilde_re", "m_tilde_im", "m_tilde_abs", *_STEADY_COLS]
    res = SweepResult(cols)
    for f, p, pt in zip(phis, params, points):
        d = DerivedParams.from_params(p)
        res.add(phi=float(f), r_d=d.r_d, r_e=p.r_e, n_tilde=d.n_tilde,
                m_tilde_re=d.m_tilde.real, m_tilde_im=d.m_tilde.imag,
                m_tilde_abs=abs(d.m_tilde), delta_c=p.delta_c,
                n_cav=pt.get("n_cav", math.nan), g2=pt.get("g2", math.nan),
                cav_top=pt.get("cav_top", math.nan), mech_top=pt.get("mech_top", math.nan),
                method=pt.get("method", ""), error=pt["error"])
    meta = _metadata(cfg, point_params(cfg, base, phi=math.pi), started)
    g2 = res.column("g2").astype(float)
    valid = np.array([not r["error"] for r in res.rows]) & np.isfinite(g2)
    if valid.any():
        j = int(np.nanargmin(np.where(valid, g2, np.nan)))
        meta["argmin_phi"] = float(phis[j])
        meta["g2_min"] = float(g2[j])
    meta["bath"] = "matched (r_e = r_d) at every phase"
    res.metadata = meta
    return res


# --------------------------------------------------------------------------- #
#                                 cat states                                  #
# --------------------------------------------------------------------------- #

CAT_VARIANTS = ("matched", "vacuum", "lossless")


def cat_params(cfg: ScenarioConfig, kappa_over_omega_m: float, g0_over_omega_m: float,
               variant: str) -> SystemParams:
    """Panel parameters in units of kappa.

    ``omega_m`` is identified with ``delta_m``; the squeezing is fixed by the
    ratio ``lambda / delta_m`` of the ``[params]`` section.
    """
    if variant not in CAT_VARIANTS:
        raise ConfigParse(f"unknown cat variant {variant!r}; expected one of "
                          + ", ".join(CAT_VARIANTS), key="variants", line=0)
    kappa = cfg.params["kappa"]
    ratio = cfg.params["lambda"] / cfg.params["delta_m"]
    dm = kappa / kappa_over_omega_m
    gamma = 0.0 if variant == "lossless" else cfg.options["gamma_over_kappa"] * kappa
    p = SystemParams(kappa=kappa, gamma=gamma, g0=g0_over_omega_m * dm, delta_m=dm,
                     lam=ratio * dm, omega_d=cfg.params["omega_d"], phi_d=cfg.params["phi_d"],
                     eps_p=0.0)
    if variant == "vacuum":
        return p
    return matched_bath(p)


def _cat_point(task) -> dict:
    p, variant, alpha, beta, nc, copts, axis, want_grid = task
    out: dict = {"error": "", "grid": None}
    try:
        d = DerivedParams.from_params(p)
        t_final = cat_time(d)
        res = evolve_conditional(p, d, alpha, beta, nc, t_final, copts,
                                 cavity_decay=0.0 if variant == "lossless" else None)
        ref = kerr_cat_reference(alpha, d.k_ratio, TruncatedSpace(nc, "cavity"))
        grid = wigner(res.cavity, axis, axis)
        out.update(t_final=t_final, fidelity=state_fidelity(res.cavity, ref), w_min=grid.min,
                   w_max=grid.max, neg_ratio=-grid.min / grid.max,
                   neg_volume=grid.negative_volume(), w_integral=grid.integral(),
                   mech_top=res.mech_top_population, steps=res.steps)
        if want_grid:
            out["grid"] = grid.values
    except OptomechError as exc:
        out["error"] = _error_text(exc)
    return out


def run_cat_wigner(cfg: ScenarioConfig, threads: int = 1) -> SweepResult:
    """Cavity Wigner functions at ``t = 2 pi / omega_m_tilde`` for each panel and bath.

    Panels are the product of the ``kappa_over_omega_m`` and
    ``g0_over_omega_m`` lists; Wigner grids go to ``extras`` under
    ``<panel>_<variant>``.
    """
    started = time.perf_counter()
    o = cfg.options
    axis = default_axis(o["grid_half_width"], o["grid_points"])
    copts = ConditionalOptions(mech_dim=cfg.mech_dim, safety=o["safety"],
                               steps_per_period=o["steps_per_period"])
    kws = o["kappa_over_omega_m"]
    labels, tasks, meta_rows = [], [], []
    for i, kw in enumerate(kws):
        for j, g in enumerate(o["g0_over_omega_m"]):
            panel = string.ascii_lowercase[j % 26]
            if len(kws) > 1:
                panel = f"{i + 1}{panel}"
            for variant in o["variants"]:
                p = cat_params(cfg, kw, g, variant)
                labels.append((panel, variant))
                meta_rows.append((kw, g, p))
                tasks.append((p, variant, complex(o["alpha"]), complex(o["beta"]),
                              cfg.cavity_dim, copts, axis, o["write_grids"]))
    points = map_ordered(_cat_point, tasks, threads)

    cols = ["panel", "variant", "kappa_over_omega_m", "gamma_over_kappa", "g0_over_omega_m",
            "r_d", "g_tilde", "omega_m_tilde", "k_ratio", "k2", "n_tilde", "t_final",
            "fidelity", "w_min", "w_max", "neg_ratio", "neg_volume", "w_integral", "mech_top",
            "steps"]
    res = SweepResult(cols)
    for (panel, variant), (kw, g, p), pt in zip(labels, meta_rows, points):
        d = DerivedParams.from_params(p)
        vals = {k: pt[k] for k in ("t_final", "fidelity", "w_min", "w_max", "neg_ratio",
                                   "neg_volume", "w_integral", "mech_top", "steps") if k in pt}
        res.add(panel=panel, variant=variant, kappa_over_omega_m=kw,
                gamma_over_kappa=p.gamma / p.kappa, g0_over_omega_m=g, r_d=d.r_d,
                g_tilde=d.g_tilde, omega_m_tilde=d.omega_m_tilde, k_ratio=d.k_ratio,
                k2=d.k_ratio ** 2, n_tilde=d.n_tilde, error=pt["error"], **vals)
        if pt["grid"] is not None:
            grid = SweepResult(["x", "y", "w"])
            for a, xv in enumerate(axis):
                for b, yv in enumerate(axis):
                    grid.add(x=xv, y=yv, w=pt["grid"][a, b])
            grid.metadata = {"panel": panel, "variant": variant, "k_ratio": d.k_ratio,
                             "kappa_over_omega_m": kw, "g0_over_omega_m": g}
            res.extras[f"{panel}_{variant}"] = grid

    meta = _metadata(cfg, meta_rows[0][2] if meta_rows else None, started)
    summary: dict = {}
    for row in res.ok_rows():
        key = f"{row['variant']}@{row['kappa_over_omega_m']:g}"
        summary[key] = min(summary.get(key, math.inf), row["w_min"])
    meta["min_w_by_variant_and_kappa"] = summary
    res.metadata = meta
    return res


# --------------------------------------------------------------------------- #
#                                   custom                                    #
# --------------------------------------------------------------------------- #


def run_custom(cfg: ScenarioConfig, threads: int = 1) -> SweepResult:
    """Steady state or transient of the configured parameters as given."""
    started = time.perf_counter()
    o = cfg.options
    p = point_params(cfg, base_params(cfg))
    d = DerivedParams.from_params(p)
    if o["mode"] == "steady":
        pt = steady_point((p, cfg.cavity_dim, cfg.mech_dim, 1e-3))
        res = SweepResult(["g0", "g_tilde", "omega_m_tilde", "r_d", "k_ratio", *_STEADY_COLS])
        res.add(g0=p.g0, g_tilde=d.g_tilde, omega_m_tilde=d.omega_m_tilde, r_d=d.r_d,
                k_ratio=d.k_ratio, n_tilde=d.n_tilde, delta_c=p.delta_c,
                n_cav=pt.get("n_cav", math.nan), g2=pt.get("g2", math.nan),
                cav_top=pt.get("cav_top", math.nan), mech_top=pt.get("mech_top", math.nan),
                method=pt.get("method", ""), error=pt["error"])
    else:
        n_t = max(1, int(round(o["t_max"] / o["dt"])))
        tg = np.linspace(0.0, n_t * o["dt"], n_t + 1)
        traj = _rwa_trajectory((p, cfg.cavity_dim, cfg.mech_dim, o["initial_cavity_nbar"], tg,
                                o["include_h_nr"], 0.05, 40))
        g2 = _g2_curve(traj["n"], traj["n2"])
        res = SweepResult(["t", "n_cav", "g2"])
        for i, t in enumerate(tg):
            res.add(t=t, n_cav=traj["n"][i], g2=g2[i])
    res.metadata = _metadata(cfg, p, started)
    return res


RUNNERS = {
    "param_map": lambda cfg, threads=1: run_param_map(cfg),
    "blockade_sweep": run_blockade_sweep,
    "rwa_check": run_rwa_check,
    "phase_sweep": run_phase_sweep,
    "cat_wigner": run_cat_wigner,
    "custom": run_custom,
}


def run(cfg: ScenarioConfig, threads: int = 1) -> SweepResult:
    return RUNNERS[cfg.scenario](cfg, threads=threads)
