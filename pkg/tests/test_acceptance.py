"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criterion 5's variance-ratio clause is strictly unattainable at its stated
parameters (the analytic floor for the extremal variance ratio is
(1-A)/(1+A) ~= 5.8e-3, six times the 1e-3 bound); the clause is asserted
exactly as stated and marked as a known failure rather than weakened.
"""

import cmath
import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import chisquare, kstest

from pumprecoil import moments
from pumprecoil.config import validate
from pumprecoil.density import quadrature_distribution, quadrature_values, tomography_signal
from pumprecoil.dipole import DipoleCharacteristic
from pumprecoil.mapping import LevelMoments, VibrationalMomentSet, ground_state, map_state, number_variance_map
from pumprecoil.photon_stats import PhotonStatistics
from pumprecoil.trajectory import SamplerPlan, sample_batch
from pumprecoil.waiting_time import (
    WaitingTimeModel,
    resonant_modulus_product_form,
    resonant_modulus_saturation_form,
)

BASE = {"lambda2": 0.5, "eta1": 0.1, "eta2": 0.075, "nu_tilde": 0.16, "saturation": 25}


def make_config(**kw):
    return validate({**BASE, **kw})


def run(cfg, n, seed, workers=2, **plan_kw):
    wtm = WaitingTimeModel.from_config(cfg)
    return sample_batch(cfg, wtm, SamplerPlan(seed=seed, n_trajectories=n, n_workers=workers, **plan_kw))


def report(criterion: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {criterion}: {status} {detail}".rstrip())
    return ok


def test_criterion_1_mc_vs_analytic_moment_sweep():
    sweep = [
        {"lambda2": lam2, "saturation": s}
        for lam2 in (1e-3, 0.1, 0.5, 1.0)
        for s in (1.0, 25.0)
    ]
    sweep.append({"lambda2": 0.5, "saturation": 25.0, "detuning_scaled": 1.0})
    sweep.append({"lambda2": 0.1, "saturation": 1.0, "detuning_scaled": 1.0})
    failures = []
    for i, params in enumerate(sweep):
        cfg = make_config(**params)
        t0 = time.perf_counter()
        ens = run(cfg, 1_000_000, seed=1000 + i)
        wall = time.perf_counter() - t0
        alpha = ens.alpha
        n = len(ens)
        abs2 = np.abs(alpha) ** 2

        def check(label, observed, se, target, z_max=4.0):
            z = abs(observed - target) / se if se > 0 else 0.0
            if z > z_max:
                failures.append(f"{params} {label}: z={z:.1f}")

        check("<|a|^2>", float(abs2.mean()), abs2.std() / math.sqrt(n), moments.mean_excitation(cfg))
        check("Re<a>", float(alpha.real.mean()), alpha.real.std() / math.sqrt(n), 0.0)
        check("Im<a>", float(alpha.imag.mean()), alpha.imag.std() / math.sqrt(n), 0.0)
        a2 = alpha * alpha
        ref2 = moments.alpha2_moment(cfg)
        check("Re<a^2>", float(a2.real.mean()), a2.real.std() / math.sqrt(n), ref2.real)
        check("Im<a^2>", float(a2.imag.mean()), a2.imag.std() / math.sqrt(n), ref2.imag)
        abs4 = abs2 * abs2
        check("<|a|^4>", float(abs4.mean()), abs4.std() / math.sqrt(n), moments.fourth_moment(cfg))
        if params.get("detuning_scaled", 0.0) == 0.0 and params["lambda2"] >= 0.5:
            a4p = a2 * a2
            ref4 = moments.even_moment(cfg, 2)
            check("Re<a^4>", float(a4p.real.mean()), a4p.real.std() / math.sqrt(n), ref4.real)
            check("Im<a^4>", float(a4p.imag.mean()), a4p.imag.std() / math.sqrt(n), ref4.imag)
        print(f"  config {params}: {wall:.1f} s for 1e6 trajectories (target <= 60 s)")
    ok = report("1", not failures, f"10-config sweep, 4 SE; {failures or 'all moments agree'}")
    assert ok, failures


def test_criterion_2_waiting_time_integrity():
    failures = []
    # resonant normalization to 1e-9
    for s in (0.1, 1.0, 5.0, 25.0, 100.0):
        m = WaitingTimeModel(s)
        total = quad(m.density, 0.0, m.support_cutoff(1e-14), limit=400)[0]
        if abs(total - 1.0) > 1e-9:
            failures.append(f"resonant norm S={s}: {total}")
    # detuned normalization to 1e-6 via the closed form against the ODE oracle
    from scipy.integrate import solve_ivp

    for s, d in ((25.0, 1.0), (5.0, 0.5), (0.1, 2.0)):
        m = WaitingTimeModel(s, d)
        hi = m.support_cutoff(1e-10)
        total = quad(m.density, 0.0, hi, limit=1000)[0]
        if abs(total - 1.0) > 1e-6:
            failures.append(f"detuned norm S={s},D={d}: {total}")
        kappa = math.sqrt(s)

        def rhs(_, y, kappa=kappa, d=d):
            p1, p3 = y[0] + 1j * y[1], y[2] + 1j * y[3]
            d1 = -0.5j * kappa * p3 - 1j * d * p1
            d3 = -0.5j * kappa * p1 - p3
            return [d1.real, d1.imag, d3.real, d3.imag]

        t_probe = np.array([1.0, 4.0])
        sol = solve_ivp(rhs, (0, 4.0), [1, 0, 0, 0], t_eval=t_probe, rtol=1e-11, atol=1e-13)
        emitted = 1.0 - (sol.y[0] ** 2 + sol.y[1] ** 2 + sol.y[2] ** 2 + sol.y[3] ** 2)
        if np.max(np.abs(m.cdf(t_probe) - emitted)) > 1e-6:
            failures.append(f"ODE oracle S={s},D={d}")
    # closed-form spectral value vs numerical Fourier quadrature at 2 nu, 1e-8
    for s in (0.1, 1.0, 25.0):
        m = WaitingTimeModel(s)
        hi = m.support_cutoff(1e-13)
        omega = 0.16
        re = quad(lambda t: m.density(t) * math.cos(omega * t), 0, hi, limit=2000)[0]
        im = quad(lambda t: m.density(t) * math.sin(omega * t), 0, hi, limit=2000)[0]
        if abs(m.spectral(omega) - (re + 1j * im)) > 1e-8:
            failures.append(f"spectral quadrature S={s}")
    # algebraic identity of the two modulus forms to 1e-12
    for s in np.geomspace(1e-2, 1e4, 20):
        for nt in (0.05, 0.16, 0.7, 2.0):
            a = resonant_modulus_product_form(s, nt)
            b = resonant_modulus_saturation_form(s, nt)
            if abs(a - b) > 1e-12 * max(a, 1e-30):
                failures.append(f"modulus identity S={s}, nt={nt}")
    # sampler KS at 1% on 1e5 draws
    rng = np.random.default_rng(77)
    for s in (0.1, 1.0, 5.0, 25.0, 100.0):
        m = WaitingTimeModel(s)
        if kstest(m.sample(rng, 100_000), m.cdf).pvalue <= 0.01:
            failures.append(f"KS S={s}")
    ok = report("2", not failures, f"{failures or 'normalization/spectral/identity/KS all pass'}")
    assert ok, failures


def test_criterion_3_photon_statistics():
    cfg = make_config(lambda2=0.25)
    ens = run(cfg, 1_000_000, seed=33)
    ps = PhotonStatistics(0.25)
    counts = ens.emission_histogram()
    total = counts.sum()
    observed, expected = [], []
    acc_o, acc_e = 0.0, 0.0
    for n in range(1, len(counts)):
        acc_o += counts[n]
        acc_e += total * ps.pmf(n)
        if acc_e >= 5.0:
            observed.append(acc_o)
            expected.append(acc_e)
            acc_o, acc_e = 0.0, 0.0
    observed.append(acc_o)
    expected.append(total - sum(expected))
    chi = chisquare(observed, expected)
    n_arr = ens.n_emissions.astype(float)
    mean = n_arr.mean()
    se_mean = n_arr.std() / math.sqrt(n_arr.size)
    var = n_arr.var(ddof=1)
    centered = (n_arr - mean) ** 2
    se_var = centered.std() / math.sqrt(n_arr.size)
    ok_chi = chi.pvalue > 0.01
    ok_mean = abs(mean - 4.0) <= 3 * se_mean
    ok_var = abs(var - 12.0) <= 4 * se_var
    ok = report(
        "3",
        ok_chi and ok_mean and ok_var,
        f"chi2 p={chi.pvalue:.3f}, mean={mean:.4f} (3SE={3 * se_mean:.4f}), var={var:.3f} (4SE={4 * se_var:.3f})",
    )
    assert ok


def test_criterion_4_fluorescence_limit():
    cfg = make_config(lambda2=1e-5)
    n_traj = 20_000
    t0 = time.perf_counter()
    ens = run(cfg, n_traj, seed=44, block_size=1024)
    wall = time.perf_counter() - t0
    alpha = ens.alpha
    failures = []

    # angular uniformity: chi-square over 16 sectors at 1%
    angles = np.angle(alpha)
    sector_counts, _ = np.histogram(angles, bins=np.linspace(-math.pi, math.pi, 17))
    chi = chisquare(sector_counts)
    if chi.pvalue <= 0.01:
        failures.append(f"angular chi2 p={chi.pvalue:.4f}")

    # central-region log-density linear in |q| with R^2 >= 0.99; uniform-width
    # bins (wide quantile bins would bow the log of the bin average even for a
    # perfect exponential), inverse-variance weights, bins kept down to three
    # decades where counts allow
    q = np.abs(quadrature_values(alpha, 0.0))
    n_bar = moments.mean_excitation(cfg)
    b_scale = math.sqrt(n_bar / 2.0)
    width = b_scale / 5.0
    edges = np.arange(0.0, float(np.quantile(q, 0.999)), width)
    counts, _ = np.histogram(q, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    dens = counts / (q.size * width)
    keep = (counts >= 16) & (dens >= dens.max() / 1000.0)
    x, y, w = centers[keep], np.log(dens[keep]), counts[keep].astype(float)
    xb, yb = np.sum(w * x) / w.sum(), np.sum(w * y) / w.sum()
    slope = np.sum(w * (x - xb) * (y - yb)) / np.sum(w * (x - xb) ** 2)
    res = y - slope * x - (yb - slope * xb)
    r2 = 1.0 - np.sum(w * res**2) / np.sum(w * (y - yb) ** 2)
    if r2 < 0.99:
        failures.append(f"log-density fit R^2={r2:.4f}")
    if not -1.2 / b_scale < slope < -0.8 / b_scale:
        failures.append(f"log-density slope {slope:.4f} vs Laplace {-1 / b_scale:.4f}")

    # quadrature variance independent of phase within 4 SE
    n_bar = moments.mean_excitation(cfg)
    for phi in np.linspace(0.0, math.pi, 8, endpoint=False):
        qphi = quadrature_values(alpha, phi)
        var = qphi.var()
        se = (qphi**2 - var).std() / math.sqrt(qphi.size)
        if abs(var - n_bar) > 4 * se:
            failures.append(f"variance at phi={phi:.2f}: {var:.1f} vs {n_bar:.1f} (4SE={4 * se:.1f})")
    ok = report(
        "4",
        not failures,
        f"{n_traj} trajectories, mean n={ens.n_emissions.mean():.0f}, {wall:.0f} s "
        f"(<= 600 s), R^2={r2:.4f}; {failures or 'all clauses pass'}",
    )
    assert ok, failures


def test_criterion_5_single_emission_limit_shape():
    cfg = make_config(lambda2=1.0 - 1e-5)
    ens = run(cfg, 1_000_000, seed=55)
    failures = []
    frac_single = float(np.mean(ens.n_emissions == 1))
    if frac_single < 0.9999:
        failures.append(f"single-emission fraction {frac_single}")

    # quadrature histogram at the maximal phase against the dipole profile
    _, phi_plus, _, _ = moments.extremal_quadratures(cfg)
    scale = math.sqrt(2.0) * cfg.eta2  # q = sqrt2 Im-component, kicks reach eta2
    hist = quadrature_distribution(ens.alpha, phi_plus, bins=200, q_range=1.05 * scale)
    d2 = DipoleCharacteristic.from_angle(cfg.dipole_theta2)
    ca, cb = d2._coeffs()

    def dipole_cdf(s):
        s = np.clip(s, -1.0, 1.0)
        return ca * (s + 1.0) + cb * (s**3 + 1.0) / 3.0

    edge_cdf = dipole_cdf(hist.edges / scale)
    model_mass = np.diff(edge_cdf)
    sample_mass = hist.counts / hist.total
    tv = 0.5 * float(np.abs(sample_mass - model_mass).sum()) + 0.5 * hist.out_of_range / hist.total
    if tv >= 0.02:
        failures.append(f"TV distance {tv:.4f}")
    ok = report(
        "5 (fraction, shape)",
        not failures,
        f"n=1 fraction {frac_single:.6f}, TV={tv:.4f}; {failures or 'both clauses pass'}",
    )
    assert ok, failures


@pytest.mark.xfail(
    strict=True,
    reason="unattainable at the stated parameters: the extremal variance ratio has the "
    "analytic floor (1-A)/(1+A) ~= 5.8e-3 for S=25, nu_tilde=0.16, six times the 1e-3 bound",
)
def test_criterion_5_variance_ratio_clause():
    cfg = make_config(lambda2=1.0 - 1e-5)
    ens = run(cfg, 1_000_000, seed=55)
    phi_minus, phi_plus, var_lo, var_hi = moments.extremal_quadratures(cfg)
    v_pos = quadrature_values(ens.alpha, phi_minus).var()
    v_mom = quadrature_values(ens.alpha, phi_plus).var()
    report(
        "5 (variance ratio)",
        v_pos < 1e-3 * v_mom,
        f"measured ratio {v_pos / v_mom:.2e}, analytic floor {var_lo / var_hi:.2e}, bound 1e-3",
    )
    assert v_pos < 1e-3 * v_mom


def test_criterion_6_anisotropy_curve():
    failures = []
    nt = 0.16
    # monotone increasing for lambda1 = 0.75
    grid = np.linspace(0.0, 100.0, 201)
    a_curve = moments.anisotropy_resonant_closed(grid, 0.25, nt)
    if not np.all(np.diff(a_curve) >= -1e-12):
        failures.append("A(S) not monotone for lambda2=0.25")
    # saturated value within 1e-3 at S = 1e4
    a_sat, _ = moments.anisotropy(make_config(lambda2=0.25, saturation=1e4))
    limit = 0.25 / math.sqrt(0.25**2 + nt**2)
    if abs(a_sat - limit) > 1e-3:
        failures.append(f"saturated value {a_sat} vs {limit}")
    # interior maximum for lambda2 = 0.8 within one grid step of the closed form
    smax = moments.s_max(make_config(lambda2=0.8))
    fine = np.arange(0.0, 40.0, 0.02)
    argmax = fine[np.argmax(moments.anisotropy_resonant_closed(fine, 0.8, nt))]
    if abs(argmax - smax) > 0.02:
        failures.append(f"argmax {argmax} vs formula {smax}")
    # threshold reproduces the ~0.66 branching requirement
    threshold = moments.s_max_threshold(nt)
    if not (abs(threshold - 0.658) < 5e-4 and round(threshold, 2) == 0.66):
        failures.append(f"threshold {threshold}")
    if moments.s_max(make_config(lambda2=0.65)) is not None:
        failures.append("lambda2=0.65 should be saturation-limited")
    if moments.s_max(make_config(lambda2=0.67)) is None:
        failures.append("lambda2=0.67 should have an interior maximum")
    ok = report("6", not failures, f"S_max={smax:.3f}, threshold={threshold:.4f}; {failures or 'curve checks pass'}")
    assert ok, failures


def test_criterion_7_mapping():
    cfg = make_config()
    rm = moments.recoil_moments(cfg)
    failures = []
    final = map_state(ground_state(), rm)
    if final.level2.n_mean != rm.n_bar_p:
        failures.append("ground-state mean not exact")
    var = number_variance_map(ground_state(), rm)
    if abs(var - (rm.n_bar_p + rm.dn_p_sq)) > 1e-12 * max(1.0, var):
        failures.append("ground-state variance beyond 1e-12")
    beta = 0.8 + 0.3j
    coherent = VibrationalMomentSet(
        LevelMoments(1.0, b_mean=beta, n_mean=abs(beta) ** 2, b2_mean=beta * beta,
                     b2dag_b2_mean=abs(beta) ** 4),
        LevelMoments(0.0),
    )
    if map_state(coherent, rm).level2.b_mean != beta:
        failures.append("coherent amplitude not bit-exact")

    # MC propagation oracle at 1e6 samples, 4 SE
    ens = run(cfg, 1_000_000, seed=777)
    shifted = beta + ens.alpha
    final_c = map_state(coherent, rm)
    checks = [
        ("b", shifted, final_c.level2.b_mean),
        ("n", np.abs(shifted) ** 2, final_c.level2.n_mean),
        ("b2", shifted**2, final_c.level2.b2_mean),
        ("b4", np.abs(shifted) ** 4, final_c.level2.b2dag_b2_mean),
    ]
    for label, mc, target in checks:
        if np.iscomplexobj(mc):
            for part in ("real", "imag"):
                vals = getattr(mc, part)
                z = abs(vals.mean() - getattr(target, part)) / (vals.std() / math.sqrt(vals.size))
                if z > 4:
                    failures.append(f"MC {label}.{part}: z={z:.1f}")
        else:
            z = abs(mc.mean() - target) / (mc.std() / math.sqrt(mc.size))
            if z > 4:
                failures.append(f"MC {label}: z={z:.1f}")
    n_mc = np.abs(shifted) ** 2
    b4_mc = np.abs(shifted) ** 4
    mean_n = n_mc.mean()
    var_mc = b4_mc.mean() + mean_n - mean_n**2
    influence = b4_mc + n_mc * (1.0 - 2.0 * mean_n)
    se = influence.std() / math.sqrt(len(ens))
    z = abs(var_mc - number_variance_map(coherent, rm)) / se
    if z > 4:
        failures.append(f"MC number variance: z={z:.1f}")
    ok = report("7", not failures, f"{failures or 'exact maps and MC propagation agree'}")
    assert ok, failures


def test_criterion_8_tomography():
    failures = []
    rng = np.random.default_rng(88)
    b = 1.0
    q = rng.laplace(0.0, b, 1_000_000)
    hist = quadrature_distribution(q / math.sqrt(2.0), 0.0, bins=400, q_range=15.0)
    taus = np.linspace(0.0, 5.0, 11)
    signal = tomography_signal(hist, taus)
    if abs(signal.p1[0]) > 1e-12:
        failures.append(f"P1(0) = {signal.p1[0]}")
    oracle = 0.5 - 0.5 / (1.0 + b * b * taus**2)
    worst = float(np.max(np.abs(signal.p1 - oracle)))
    if worst > 1e-3:
        failures.append(f"Laplace oracle deviation {worst:.2e}")
    # imaginary residual below 5x the Monte Carlo noise floor
    mass = hist.counts / hist.in_range
    for tau, resid in zip(signal.tau, signal.imag_residual):
        sins = np.sin(hist.centers * tau)
        floor = 0.5 * math.sqrt(max(float(mass @ sins**2 - (mass @ sins) ** 2), 1e-30) / hist.in_range)
        if abs(resid) > 5 * max(floor, 1e-15):
            failures.append(f"imag residual at tau={tau}: {resid:.2e} vs floor {floor:.2e}")
    ok = report("8", not failures, f"max |P1 - oracle| = {worst:.2e}; {failures or 'tomography clauses pass'}")
    assert ok, failures


def test_criterion_9_determinism_across_workers(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps(BASE))
    digests = []
    for w in (1, 4, 16):
        out = tmp_path / f"w{w}"
        res = subprocess.run(
            [
                sys.executable, "-m", "pumprecoil.cli", "density", "--config", "cfg.json",
                "--samples", "20000", "--grid", "50", "50", "--seed", "123",
                "--workers", str(w), "--out", str(out),
            ],
            cwd=tmp_path,
            capture_output=True,
            text=True,
        )
        assert res.returncode == 0, res.stderr
        digests.append((out / "density.csv").read_bytes() + (out / "density.json").read_bytes())
    ok = report("9", digests[0] == digests[1] == digests[2], "byte-identical outputs for workers 1/4/16")
    assert ok
