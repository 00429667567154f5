"""Acceptance suite: one PASS/FAIL line per criterion, each at its stated tolerance.

Heavy runs use the shipped configs; the Wigner and blockade runs take a few
minutes each on one core.
"""

import math
from pathlib import Path

import mpmath
import numpy as np
import pytest

from conftest import random_density
from optomech_sim.dynamics import (
    NORMAL,
    Channel,
    DissipatorSpec,
    StepperOptions,
    evolve,
    liouvillian_apply,
    optomech_dissipators,
    steady_state,
    trace_distance,
)
from optomech_sim.fock import ModeOps, TruncatedSpace, destroy, fock_state, number, tensor
from optomech_sim.harness import load, run
from optomech_sim.harness.cli import main
from optomech_sim.harness.results import numeric_digest
from optomech_sim.model import (
    DerivedParams,
    SystemParams,
    bath_params,
    build_h_oms,
    effective_coupling,
    squeeze_param,
    transformed_frequency,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        return ok
    return emit


def test_criterion_1_derived_parameters(report):
    mpmath.mp.dps = 40
    dm, lam, g0 = mpmath.mpf(4000), mpmath.mpf("3999.98"), mpmath.mpf("0.5")
    r_ref = mpmath.log((dm + lam) / (dm - lam)) / 4
    g_ref = float(g0 / 2 * mpmath.exp(r_ref))
    w_ref = float(dm / mpmath.cosh(2 * r_ref))
    r = squeeze_param(4000, 3999.98)
    g = effective_coupling(0.5, r)
    w = transformed_frequency(4000, r)
    ok = (abs(r - 3.2248) <= 0.005 and abs(g / g_ref - 1) < 1e-3 and abs(w / w_ref - 1) < 1e-3
          and abs(g - 6.29) < 0.01 and abs(w - 12.65) < 0.01)
    assert report(1, ok, f"r_d={r:.5f} g_tilde={g:.4f} (ref {g_ref:.4f}) "
                         f"omega_m_tilde={w:.4f} (ref {w_ref:.4f})")


def test_criterion_2_bath_cancellation(report):
    worst = 0.0
    for r in (0.5, 1.0, 2.0, 3.22):
        for phi in (math.pi, 3 * math.pi):
            n, m = bath_params(r, math.pi + phi, r, math.pi)
            worst = max(worst, n, abs(m))
    vac = 0.0
    for r in (0.5, 1.0, 2.0, 3.22):
        n, m = bath_params(0.0, 0.0, r, math.pi)
        vac = max(vac, abs(n / math.sinh(r) ** 2 - 1), abs(abs(m) / (math.sinh(2 * r) / 2) - 1))
    ok = worst < 1e-12 and vac < 1e-13
    assert report(2, ok, f"max matched |N|,|M|={worst:.2e}; vacuum-bath relative error={vac:.2e}")


def test_criterion_3_lindblad(report):
    p = SystemParams(delta_m=3.0, lam=1.0, g0=1.0, gamma=1.0, r_e=0.3, phi_e=0.4, eps_p=0.3,
                     delta_c=0.5)
    d = DerivedParams.from_params(p)
    ops = ModeOps.build(4, 4)
    H, D = build_h_oms(p, d, ops), optomech_dissipators(p, d, ops)
    tr = max(abs(np.trace(liouvillian_apply(H, D, random_density(ops.space, seed=s))))
             for s in range(10))

    s = TruncatedSpace(6, "cavity")
    a = destroy(s)
    cav = DissipatorSpec((Channel(a, 1.0, NORMAL),))
    ts = np.linspace(0, 3, 7)
    traj = evolve(fock_state(s, 1), 0.3 * number(s), cav, ts,
                  opts=StepperOptions(observables={"n": number(s)}))
    decay = np.max(np.abs(traj.expectations["n"].real / np.exp(-ts) - 1))
    drive = 0.0
    for delta in (0.0, 0.5, 2.0):
        rho = steady_state(delta * number(s) + 0.1 * (a + a.dag()), cav)
        n = np.real(np.trace(rho.data @ number(s).data))
        drive = max(drive, abs(n / (0.01 / (delta ** 2 + 0.25)) - 1))

    big = ModeOps.build(8, 6)
    H8, D8 = build_h_oms(p, d, big), optomech_dissipators(p, d, big)
    rho0 = tensor(fock_state(big.cavity, 0), fock_state(big.mech, 0)).dm()
    long = evolve(rho0, H8, D8, [0.0, 50.0], opts=StepperOptions(method="lawson", safety=1.0))
    dist = trace_distance(long.states[-1], steady_state(H8, D8))

    ok = tr < 1e-10 and decay < 0.02 and drive < 0.02 and dist < 1e-6
    assert report(3, ok, f"|Tr rho_dot|={tr:.1e} decay err={decay:.1e} drive err={drive:.1e} "
                         f"steady vs evolve(kappa t=50) on 8x6: {dist:.1e}")


def test_criterion_4_blockade(report):
    cfg = load(CONFIGS / "blockade.cfg")
    res = run(cfg)
    meta = res.metadata
    rows = res.ok_rows()
    g0 = np.array([r["g0"] for r in rows])
    g2 = np.array([r["g2"] for r in rows])
    mid = res.rows[len(res) // 2]
    in_range = all(2 <= r["g_tilde"] <= 8 and 8 <= r["omega_m_tilde"] <= 20
                   for r in res.rows if 0.16 <= r["g0"] <= 0.64)
    sub_poisson = bool(np.any((g2 < 1) & (g0 < 1)))
    deep = float(g2.min()) < 0.1
    step = meta["k_step"]
    maxima = meta["local_maxima_k"]
    near = {t: any(abs(k - t) <= step + 1e-12 for k in maxima) for t in (math.sqrt(0.5), 1.0)}
    ok = len(rows) == len(res) and in_range and sub_poisson and deep and all(near.values())
    assert report(4, ok, f"{len(res)} points, {len(res) - len(rows)} flagged; min g2={g2.min():.4f} "
                         f"at g0={meta['g2_min_g0']:.3f}; local maxima at k="
                         f"{', '.join(f'{k:.3f}' for k in maxima)} (step {step:.3f}); "
                         f"g_tilde={mid['g_tilde']:.2f} omega_m_tilde={mid['omega_m_tilde']:.2f} "
                         f"at g0={mid['g0']:.3f}")


def test_criterion_5_phase(report):
    cfg = load(CONFIGS / "phase_desk.cfg")
    res = run(cfg)
    phi = res.column("phi").astype(float)
    g2 = res.column("g2").astype(float)
    step = phi[1] - phi[0]
    argmin = res.metadata["argmin_phi"]
    at = {f: g2[int(np.argmin(np.abs(phi - f)))] for f in (math.pi / 2, math.pi, 1.5 * math.pi)}
    rise = min(at[math.pi / 2], at[1.5 * math.pi]) / at[math.pi]
    flagged = sum(1 for r in res.rows if r["error"])
    ok = abs(argmin - math.pi) <= step + 1e-12 and rise >= 10 and flagged == 0
    assert report(5, ok, f"argmin phi={argmin:.4f} (step {step:.4f}); g2(pi)={at[math.pi]:.4f} "
                         f"g2(pi/2)={at[math.pi / 2]:.4f} g2(3pi/2)={at[1.5 * math.pi]:.4f} "
                         f"rise={rise:.1f}x; flagged={flagged}")


def test_criterion_6_rwa(report):
    cfg = load(CONFIGS / "rwa_check.cfg")
    res = run(cfg)
    m = res.metadata["metrics"]
    ratio = res.metadata["rwa_report"]["omega_d_over_omega_m"]
    plateau = m["plateau_time"]
    ok = (ratio >= 2.3 and m["mean_rel_dev"] < 0.10 and m["has_two_omega_d_component"]
          and 8 <= plateau <= 12)
    assert report(6, ok, f"omega_d/omega_m_tilde={ratio:.3f}; mean rel dev on [1,10]="
                         f"{m['mean_rel_dev']:.3%}; spectral peak {m['spectral_peak_omega']:.2f} "
                         f"(2 omega_d={m['two_omega_d']:.0f}, prominence "
                         f"{m['spectral_peak_prominence']:.3g}); plateau at kappa t={plateau:.2f}")


def _cat(text):
    return run(load(text=text))


def test_criterion_7_cat(report):
    head = "[run]\nscenario = cat_wigner\ncavity_dim = {nc}\nmech_dim = {nm}\n[cat_wigner]\n" \
           "g0_over_omega_m = 1.26e-4\nwrite_grids = false\n"
    weak_loss = _cat(head.format(nc=25, nm=15) + "kappa_over_omega_m = 3.16e-5\n"
                     "variants = matched, vacuum, lossless\n")
    by = {r["variant"]: r for r in weak_loss.rows}
    fid = by["lossless"]["fidelity"]
    wm, wv = by["matched"], by["vacuum"]
    negative = all(r["w_min"] < -0.01 * r["w_max"] for r in (wm, wv))
    spread = abs(wm["w_min"] - wv["w_min"]) / max(abs(wm["w_min"]), abs(wv["w_min"]))

    loss_scan = _cat(head.format(nc=18, nm=28) + "kappa_over_omega_m = 3.16e-5, 3.16e-4\n"
                     "variants = vacuum\n")
    low, high = (r["w_min"] for r in loss_scan.rows)
    drop = low / high if high < 0 else math.inf
    errors = [r["error"] for r in weak_loss.rows + loss_scan.rows if r["error"]]
    ok = fid > 0.999 and negative and spread <= 0.10 and drop >= 5 and not errors
    assert report(7, ok, f"lossless F={fid:.6f}; min W matched={wm['w_min']:.4f} "
                         f"vacuum={wv['w_min']:.4f} (spread {spread:.1%}); vacuum bath min W "
                         f"{low:.4f} -> {high:.4f} at 10x cavity loss ({drop:.1f}x drop)")


def test_criterion_8_determinism(report, tmp_path, capsys):
    text = ("[run]\nscenario = phase_sweep\ncavity_dim = 3\nmech_dim = 10\n[params]\n"
            "delta_m = 27\nlambda = 24\ng0 = 10.5\ngamma = 1\n[phase_sweep]\npoints = 5\n")
    cfg = tmp_path / "phase.cfg"
    cfg.write_text(text)
    digests = []
    for i, threads in enumerate((1, 1, 2)):
        out = tmp_path / f"run{i}.csv"
        assert main(["phase-sweep", "--config", str(cfg), "--out", str(out),
                     "--threads", str(threads)]) == 0
        digests.append(numeric_digest(out))
    out = tmp_path / "replay.csv"
    assert main(["replay", str(tmp_path / "run0.csv"), "--out", str(out)]) == 0
    digests.append(numeric_digest(out))
    capsys.readouterr()
    ok = len(set(digests)) == 1
    assert report(8, ok, "rerun, 2-worker rerun and replay give byte-identical numeric columns"
                  if ok else "numeric columns differ between reruns")
