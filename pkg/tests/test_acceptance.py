"""Acceptance gate: one test per release criterion, each printing a
pass/fail line with its measured statistic and wall time.

Desk scale throughout: d = 2 at n = 64 for the solver criteria, d = 3 at
n = 32 in the smoke test, with every tolerance pinned in the assertions.
"""

import os
import time
from dataclasses import replace

import numpy as np

from nspd.checks import run_all_checks
from nspd.cli import main
from nspd.config import SchemeSpec, default_config
from nspd.diagnostics import (
    band_limited_field,
    blowup_monitor,
    constraint_report,
    estimate_ratios,
    psi_ell,
    semigroup_smoothing_constant,
)
from nspd.fields import SystemState, initial_state
from nspd.integrators import rodrigues_rotate, run_trajectory, step_director_noise_rotation
from nspd.mild import picard_iterate, state_difference_norm
from nspd.noise import (
    NoiseConfig,
    brownian_bridge_refine,
    coarsen_noise_path,
    sample_noise_path,
)
from nspd.nonlinear import ericksen_stress
from nspd.records import STATUS_COMPLETED
from nspd.spectral import Grid, SpectralField, sobolev_norm, to_physical, to_spectral, zero_field
from nspd.studies import (
    constraint_drift_study,
    strong_convergence_study,
    weak_ito_stratonovich_study,
)

from reference_stepper import reference_final_norms


def report(number: int, name: str, passed: bool, detail: str, elapsed: float) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"[acceptance {number:02d}] {name}: {status} ({detail}; {elapsed:.1f}s)")


NOISE = NoiseConfig(n_modes=8, sigma=0.05, decay_s=4.0, seed=1)


def desk_config(**overrides):
    base = dict(grid=Grid(2, 64), noise=NOISE)
    base.update(overrides)
    return default_config().with_overrides(**base)


def test_01_sphere_constraint():
    t0 = time.monotonic()
    cfg = desk_config(
        scheme=SchemeSpec(dt=1e-3, t_max=1.0, renormalize_director=True),
    )
    rec = run_trajectory(cfg)
    worst = max(rec.max_constraint_dev)
    assert rec.status == STATUS_COMPLETED

    drift_cfg = desk_config(scheme=SchemeSpec(dt=4e-3, t_max=0.5))
    study = constraint_drift_study(drift_cfg, (4e-3, 2e-3, 1e-3, 5e-4))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-12 and study.slope >= 0.9
    report(
        1,
        "sphere constraint",
        ok,
        f"renormalized max dev {worst:.2e}, drift slope {study.slope:.2f}",
        elapsed,
    )
    assert worst <= 1e-12
    assert study.slope >= 0.9
    assert elapsed <= 240.0  # <= 2 min per run


def test_02_noise_step_isometry(rng):
    t0 = time.monotonic()
    n_samples = 1_000_000
    d = rng.standard_normal((3, n_samples))
    h = rng.standard_normal((3, n_samples))
    deta = rng.standard_normal(n_samples) * 0.3
    out = rodrigues_rotate(d, h, deta)
    before = np.sqrt((d**2).sum(0))
    after = np.sqrt((out**2).sum(0))
    worst_core = float(np.abs(after - before).max() / before.max())

    grid = Grid(2, 1024)
    df = to_spectral(grid, rng.standard_normal((3,) + grid.shape))
    hf = to_spectral(grid, rng.standard_normal((3,) + grid.shape))
    rotated = step_director_noise_rotation(df, hf, 0.41)
    mag0 = np.sqrt((to_physical(df) ** 2).sum(0))
    mag1 = np.sqrt((to_physical(rotated) ** 2).sum(0))
    worst_field = float(np.abs(mag1 - mag0).max() / mag0.max())
    elapsed = time.monotonic() - t0
    worst = max(worst_core, worst_field)
    report(2, "noise-step isometry", worst <= 1e-14, f"max rel dev {worst:.2e}", elapsed)
    assert worst <= 1e-14
    assert elapsed <= 10.0


def test_03_ito_stratonovich_weak_consistency():
    t0 = time.monotonic()
    res = weak_ito_stratonovich_study(
        (0.04, 0.02, 0.01, 0.005), n_paths=10_000, t_final=1.0
    )
    elapsed = time.monotonic() - t0
    report(
        3,
        "Ito/Stratonovich weak consistency",
        res.slope >= 0.9,
        f"slope {res.slope:.2f}",
        elapsed,
    )
    assert res.slope >= 0.9
    assert elapsed <= 120.0


def test_04_incompressibility():
    t0 = time.monotonic()
    cfg = desk_config(
        grid=Grid(2, 32),
        scheme=SchemeSpec(dt=2e-3, t_max=0.2),
        noise=replace(NOISE, n_modes=6, sigma=0.2),
    )
    rec = run_trajectory(cfg)
    worst = max(rec.div_ratio)

    results, _ = run_all_checks(cfg.with_overrides(scheme=SchemeSpec(dt=2e-3, t_max=0.1)))
    row = next(r for r in results if r.name == "worst_step_divergence_ratio")
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-12 and row.passed
    report(
        4,
        "incompressibility",
        ok,
        f"trajectory max {worst:.2e}, cmd_check row {row.value:.2e}",
        elapsed,
    )
    assert worst <= 1e-12
    assert row.passed


def test_05_deterministic_reduction():
    t0 = time.monotonic()
    amp = eps = 0.05
    cfg = desk_config(
        noise=replace(NOISE, sigma=0.0),
        h_constant=(0.0, 0.0, 0.0),
        h_terms=(),
        velocity_amplitude=amp,
        director_epsilon=eps,
        scheme=SchemeSpec(dt=5e-4, t_max=0.5),
    )
    rec = run_trajectory(cfg)
    ours = rec.v_alpha[-1]
    ref = reference_final_norms(64, 2.5e-4, 0.5, amp, eps)
    rel = abs(ours - ref) / ref
    elapsed = time.monotonic() - t0
    report(5, "deterministic reduction", rel <= 1e-6, f"rel diff {rel:.2e}", elapsed)
    assert rec.status == STATUS_COMPLETED
    assert rel <= 1e-6
    assert elapsed <= 180.0


def test_06_strong_convergence():
    t0 = time.monotonic()
    cfg = default_config().with_overrides(
        grid=Grid(2, 32),
        noise=NoiseConfig(n_modes=6, sigma=0.1, decay_s=4.0, seed=11),
        velocity_amplitude=0.2,
        scheme=SchemeSpec(dt=4e-3, t_max=0.1),
    )
    res = strong_convergence_study(cfg, (4e-3, 2e-3, 1e-3, 5e-4), n_paths=200)
    elapsed = time.monotonic() - t0
    report(6, "strong convergence", res.slope >= 0.9, f"slope {res.slope:.2f}", elapsed)
    assert res.slope >= 0.9
    assert elapsed <= 180.0


def test_07_picard_fixed_point():
    t0 = time.monotonic()
    noise = NoiseConfig(n_modes=4, sigma=0.02, decay_s=4.0, seed=7)
    t_final = 0.05
    base = sample_noise_path(10, t_final / 10, noise)  # coarsest dt = 5e-3

    def level_config(dt):
        return desk_config(
            noise=noise,
            velocity_amplitude=0.05,
            director_epsilon=0.05,
            scheme=SchemeSpec(variant="ito_plus_correction", dt=dt, t_max=t_final),
        )

    cfg0 = level_config(5e-3)
    y0 = initial_state(cfg0.grid, 0.05, 0.05)
    res0 = picard_iterate(y0, base, cfg0, t_final, n_iters=5)
    geometric = res0.residuals[4] / res0.residuals[0]

    gaps = []
    dts = (5e-3, 2.5e-3, 1.25e-3)
    for factor, dt in zip((1, 2, 4), dts):
        path = brownian_bridge_refine(base, factor)
        cfg = level_config(dt)
        res = picard_iterate(y0, path, cfg, t_final, n_iters=8)
        rec = run_trajectory(cfg, noise_path=path, keep_states=True)
        gaps.append(
            max(
                state_difference_norm(a, b, cfg.alpha, "V")
                for a, b in zip(res.fixed_point, rec.states)
            )
        )
    slope = float(np.polyfit(np.log(dts), np.log(gaps), 1)[0])
    elapsed = time.monotonic() - t0
    ok = geometric <= 1e-2 and slope >= 0.9
    report(
        7,
        "Picard fixed point",
        ok,
        f"r5/r1 {geometric:.2e}, agreement slope {slope:.2f}",
        elapsed,
    )
    assert geometric <= 1e-2
    assert slope >= 0.9
    assert elapsed <= 120.0


def test_08_estimate_ratio_suites():
    t0 = time.monotonic()
    grid = Grid(2, 64)
    alpha = 2.0
    suites = [estimate_ratios(grid, alpha, n_samples=100, seed=s) for s in (101, 202)]
    stable = True
    for key in suites[0]:
        a, b = suites[0][key], suites[1][key]
        assert np.isfinite(a) and np.isfinite(b) and a > 0 and b > 0
        stable &= max(a, b) / min(a, b) < 3.0

    m_fit = [
        semigroup_smoothing_constant(grid, alpha, alpha + 1.0, n_samples=25, seed=s)
        for s in (11, 12)
    ]
    stable &= max(m_fit) / min(m_fit) < 3.0

    # homogeneity invariance, exact to 1e-12
    gen = np.random.default_rng(5)
    d = band_limited_field(grid, 3, 5, gen)
    m = band_limited_field(grid, 3, 5, gen)

    def stress_ratio(c):
        lhs = sobolev_norm(
            ericksen_stress(
                SpectralField(grid, c * d.coeffs), SpectralField(grid, c * m.coeffs)
            ),
            alpha - 1.0,
        )
        return lhs / (c * sobolev_norm(d, alpha + 1.0) * c * sobolev_norm(m, alpha + 1.0))

    base = stress_ratio(1.0)
    homogeneous = all(abs(stress_ratio(c) - base) <= 1e-12 * base for c in (0.25, 4.0, 32.0))
    elapsed = time.monotonic() - t0
    ok = stable and homogeneous
    report(
        8,
        "estimate ratio suites",
        ok,
        f"max ratios {max(suites[0].values()):.2f}/{max(suites[1].values()):.2f}, "
        f"M {m_fit[0]:.2f}, homogeneity exact",
        elapsed,
    )
    assert stable
    assert homogeneous
    assert elapsed <= 60.0


def test_09_stopping_time_semantics():
    t0 = time.monotonic()
    # synthetic 1/(1-t) record reproduces (1/2, 3/4, 7/8) exactly
    times = np.arange(64) / 64.0
    sample = blowup_monitor(times, 1.0 / (1.0 - times), (2.0, 4.0, 8.0))
    exact = sample.tau_m == (0.5, 0.75, 0.875)

    # crossings are non-decreasing on real trajectories
    cfg = desk_config(
        grid=Grid(2, 16),
        noise=replace(NOISE, n_modes=4, sigma=0.3),
        velocity_amplitude=1.0,
        thresholds=(5.0, 6.0, 7.0),
        scheme=SchemeSpec(dt=2e-3, t_max=0.2),
    )
    rec = run_trajectory(cfg)
    taus = rec.tau_list
    monotone = taus == sorted(taus)

    # numerical failure never reports completed
    xs = Grid(2, 8).meshgrid()
    huge = to_spectral(
        Grid(2, 8), 1e110 * np.stack([np.cos(xs[0]), np.sin(xs[1]), np.ones(xs[0].shape)])
    )
    fail_cfg = desk_config(
        grid=Grid(2, 8),
        noise=replace(NOISE, n_modes=2, sigma=0.0),
        h_constant=(0.0, 0.0, 0.0),
        h_terms=(),
        scheme=SchemeSpec(dt=1e-2, t_max=0.1),
        thresholds=(1e200, 1e250, 1e301),
    )
    with np.errstate(over="ignore", invalid="ignore"):
        fail_rec = run_trajectory(
            fail_cfg, initial=SystemState(0.0, zero_field(Grid(2, 8), 2), huge)
        )
    never_completed = fail_rec.status != STATUS_COMPLETED
    elapsed = time.monotonic() - t0
    ok = exact and monotone and never_completed
    report(
        9,
        "stopping-time semantics",
        ok,
        f"crossings {sample.tau_m}, status {fail_rec.status}",
        elapsed,
    )
    assert exact and monotone and never_completed


def test_10_mollified_constraint_limit(rng):
    t0 = time.monotonic()
    grid = Grid(2, 64)
    worst_gap = 0.0
    monotone = True
    for _ in range(3):
        bump = band_limited_field(grid, 3, 3, rng, amplitude=0.4)
        e3 = np.zeros((3,) + grid.shape)
        e3[2] = 1.0
        d = to_spectral(grid, e3 + to_physical(bump))
        rep = constraint_report(d)
        assert rep.y_minus > 1e-8 and rep.z_plus > 1e-8  # mixed sign
        gaps = [abs(psi_ell(d, ell) - rep.y_minus) for ell in (1e2, 1e3, 1e4)]
        monotone &= all(b <= a + 1e-15 for a, b in zip(gaps, gaps[1:]))
        worst_gap = max(worst_gap, gaps[-1])
    elapsed = time.monotonic() - t0
    ok = worst_gap <= 1e-6 and monotone
    report(10, "mollified constraint limit", ok, f"gap at 1e4: {worst_gap:.2e}", elapsed)
    assert worst_gap <= 1e-6
    assert monotone
    assert elapsed <= 10.0


def test_11_reproducibility(tmp_path):
    t0 = time.monotonic()
    cfg_text = """
[grid]
dim = 2
n_per_axis = 16

[scheme]
dt = 5e-3
t_max = 0.05

[noise]
n_modes = 3
sigma = 0.05
seed = 11
"""
    p = tmp_path / "repro.cfg"
    p.write_text(cfg_text)
    out1, out2 = str(tmp_path / "one"), str(tmp_path / "two")
    code1 = main(["ensemble", "--config", str(p), "--out", out1, "--n-traj", "4"])
    code2 = main(["ensemble", "--config", str(p), "--out", out2, "--n-traj", "4"])
    names1 = sorted(os.listdir(out1))
    names2 = sorted(os.listdir(out2))
    identical = names1 == names2 and all(
        open(os.path.join(out1, n), "rb").read() == open(os.path.join(out2, n), "rb").read()
        for n in names1
    )
    elapsed = time.monotonic() - t0
    report(
        11,
        "ensemble reproducibility",
        identical and code1 == code2 == 0,
        f"{len(names1)} files byte-identical",
        elapsed,
    )
    assert code1 == 0 and code2 == 0
    assert identical
    assert elapsed <= 60.0


def test_3d_smoke():
    # d = 3 at n = 32: a short noisy run keeps every invariant
    t0 = time.monotonic()
    cfg = default_config().with_overrides(
        grid=Grid(3, 32),
        noise=NoiseConfig(n_modes=4, sigma=0.05, decay_s=4.0, seed=13),
        h_constant=(0.0, 0.5, 1.0),
        h_terms=(),
        scheme=SchemeSpec(dt=2e-3, t_max=0.02, renormalize_director=True),
    )
    rec = run_trajectory(cfg)
    elapsed = time.monotonic() - t0
    ok = (
        rec.status == STATUS_COMPLETED
        and max(rec.div_ratio) <= 1e-12
        and max(rec.max_constraint_dev) <= 1e-12
    )
    report(0, "3d smoke", ok, f"max dev {max(rec.max_constraint_dev):.2e}", elapsed)
    assert ok
