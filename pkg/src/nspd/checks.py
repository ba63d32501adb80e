"""Invariant battery behind the `check` subcommand.

Each suite returns CheckResult rows; a run passes when every row does.
Fitted constants (smoothing constant, product constant, estimate ratios)
are reported as values with finiteness and cross-seed stability asserted,
never specific magnitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import diagnostics, nonlinear, spectral
from .config import SolverConfig, build_h_field
from .fields import SystemState, initial_state
from .integrators import run_trajectory, step_director_noise_rotation
from .noise import (
    NoiseIncrement,
    apply_velocity_noise,
    hilbert_schmidt_bound,
    hilbert_schmidt_norm_sq,
    sample_increment,
    spectral_weights,
    velocity_basis,
)
from .spectral import (
    SpectralField,
    dealias,
    divergence_ratio,
    l2_inner,
    l2_norm,
    leray_project,
    semigroup_apply,
    sobolev_norm,
    to_physical,
    to_spectral,
)
from .studies import weak_ito_stratonovich_study


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    value: float
    bound: float
    passed: bool
    kind: str = "max"  # "max": value <= bound; "min": value >= bound


def _le(suite: str, name: str, value: float, bound: float) -> CheckResult:
    return CheckResult(suite, name, float(value), float(bound), bool(value <= bound), "max")


def _ge(suite: str, name: str, value: float, bound: float) -> CheckResult:
    return CheckResult(suite, name, float(value), float(bound), bool(value >= bound), "min")


def spectral_suite(cfg: SolverConfig, seed: int = 101) -> list[CheckResult]:
    grid = cfg.grid
    rng = np.random.Generator(np.random.Philox(key=[seed, 10]))
    out: list[CheckResult] = []

    parseval = 0.0
    projection = 0.0
    solenoid = 0.0
    law = 0.0
    contraction = 0.0
    for _ in range(5):
        samples = rng.standard_normal((grid.dim,) + grid.shape)
        f = to_spectral(grid, samples)
        quad = np.sqrt((samples**2).sum() * grid.cell_volume)
        parseval = max(parseval, abs(quad - l2_norm(f)) / quad)
        pf = leray_project(f)
        projection = max(
            projection,
            l2_norm(SpectralField(grid, leray_project(pf).coeffs - pf.coeffs)) / l2_norm(f),
        )
        solenoid = max(solenoid, np.abs(spectral.divergence(pf).coeffs).max() / l2_norm(f))
        g = dealias(f)
        for t, s in ((0.1, 0.7), (0.7, 0.1)):
            ab = semigroup_apply(semigroup_apply(g, t), s)
            a_b = semigroup_apply(g, t + s)
            law = max(law, l2_norm(SpectralField(grid, ab.coeffs - a_b.coeffs)) / l2_norm(g))
        mean_zero = SpectralField(grid, g.coeffs.copy())
        mean_zero.coeffs[(slice(None),) + (0,) * grid.dim] = 0.0
        for t in (0.05, 0.5, 3.0):
            contraction = max(
                contraction, l2_norm(semigroup_apply(mean_zero, t)) / l2_norm(mean_zero)
            )
    out.append(_le("spectral", "parseval_rel_residual", parseval, 1e-12))
    out.append(_le("spectral", "projection_idempotence", projection, 1e-14))
    out.append(_le("spectral", "projection_solenoidality", solenoid, 1e-12))
    out.append(_le("spectral", "semigroup_law", law, 1e-13))
    out.append(_le("spectral", "semigroup_contraction", contraction, 1.0 + 1e-15))

    c0 = [
        _product_constant(cfg, seed_i) for seed_i in (seed, seed + 1)
    ]
    out.append(_le("spectral", "product_constant_c0", c0[0], np.inf))
    out.append(_le("spectral", "product_constant_stability", max(c0) / min(c0), 3.0))

    m_fit = diagnostics.semigroup_smoothing_constant(
        grid, s=cfg.alpha, s_prime=cfg.alpha + 1.0, n_samples=20, seed=seed
    )
    out.append(_le("spectral", "semigroup_smoothing_M", m_fit, np.inf))
    return out


def _product_constant(cfg: SolverConfig, seed: int, n_samples: int = 100) -> float:
    grid = cfg.grid
    rng = np.random.Generator(np.random.Philox(key=[seed, 11]))
    k_band = max(2, grid.k_max_retained // 3)
    best = 0.0
    for _ in range(n_samples):
        f = diagnostics.band_limited_field(grid, 1, k_band, rng)
        g = diagnostics.band_limited_field(grid, 1, k_band, rng)
        fg = to_spectral(grid, to_physical(f) * to_physical(g))
        denom = spectral.linf_norm(f) * sobolev_norm(g, cfg.alpha) + sobolev_norm(
            f, cfg.alpha
        ) * spectral.linf_norm(g)
        if denom > 0:
            best = max(best, sobolev_norm(fg, cfg.alpha) / denom)
    return best


def nonlinear_suite(cfg: SolverConfig, seed: int = 202) -> list[CheckResult]:
    grid = cfg.grid
    rng = np.random.Generator(np.random.Philox(key=[seed, 20]))
    k_band = max(2, grid.k_max_retained // 3)
    out: list[CheckResult] = []

    div_free = 0.0
    energy = 0.0
    point_orth = 0.0
    cross_identity = 0.0
    for _ in range(5):
        u = diagnostics.solenoidal_band_limited_field(grid, k_band, rng)
        v = diagnostics.solenoidal_band_limited_field(grid, k_band, rng)
        d = diagnostics.band_limited_field(grid, 3, k_band, rng)
        h = diagnostics.band_limited_field(grid, 3, k_band, rng)
        b = nonlinear.convective_term(u, v)
        m = nonlinear.ericksen_stress(d, d)
        div_free = max(div_free, divergence_ratio(b), divergence_ratio(m))
        energy = max(
            energy, abs(l2_inner(b, v)) / (l2_norm(u) * l2_norm(v) ** 2)
        )
        d_phys, h_phys = to_physical(d), to_physical(h)
        g_phys = nonlinear.cross3(d_phys, h_phys)
        dot = np.abs(np.einsum("c...,c...->...", d_phys, g_phys))
        scale = np.sqrt((d_phys**2).sum(0)) * np.sqrt((h_phys**2).sum(0)) + 1e-300
        point_orth = max(point_orth, float((dot / scale).max()))
        lhs = -((g_phys**2).sum(0))
        rhs = np.einsum("c...,c...->...", d_phys, nonlinear.double_cross(d_phys, h_phys))
        cross_identity = max(
            cross_identity, float(np.abs(lhs - rhs).max() / (np.abs(lhs).max() + 1e-300))
        )
    out.append(_le("nonlinear", "output_divergence_ratio", div_free, 1e-12))
    out.append(_le("nonlinear", "advection_energy_orthogonality", energy, 1e-11))
    out.append(_le("nonlinear", "pointwise_orthogonality", point_orth, 1e-15))
    out.append(_le("nonlinear", "double_cross_identity", cross_identity, 1e-14))

    ratios = [
        diagnostics.estimate_ratios(grid, cfg.alpha, n_samples=25, seed=s)
        for s in (seed, seed + 1)
    ]
    for key in ratios[0]:
        a, b = ratios[0][key], ratios[1][key]
        out.append(_le("estimates", f"{key}_ratio", max(a, b), np.inf))
        if min(a, b) > 0:
            out.append(_le("estimates", f"{key}_stability", max(a, b) / min(a, b), 3.0))
    return out


def noise_suite(cfg: SolverConfig, seed: int = 303) -> list[CheckResult]:
    grid = cfg.grid
    out: list[CheckResult] = []
    noise = replace(cfg.noise, sigma=max(cfg.noise.sigma, 0.05))
    basis = velocity_basis(grid, noise.n_modes)

    a = sample_increment(12, 1e-3, noise, trajectory_id=5)
    b = sample_increment(12, 1e-3, noise, trajectory_id=5)
    bitwise = float(np.abs(a.dW - b.dW).max() + abs(a.dEta - b.dEta))
    out.append(_le("noise", "increment_determinism", bitwise, 0.0))

    gram = np.zeros((noise.n_modes, noise.n_modes))
    for i in range(noise.n_modes):
        for j in range(noise.n_modes):
            gram[i, j] = l2_inner(basis.field(i), basis.field(j))
    out.append(
        _le("noise", "basis_orthonormality", np.abs(gram - np.eye(noise.n_modes)).max(), 1e-12)
    )

    rng = np.random.Generator(np.random.Philox(key=[seed, 30]))
    v = diagnostics.solenoidal_band_limited_field(grid, 3, rng)
    inc = sample_increment(0, 1e-2, noise)
    q = apply_velocity_noise(v, inc, noise, cfg.alpha, basis)
    out.append(_le("noise", "noise_divergence_ratio", divergence_ratio(q), 1e-12))
    out.append(_le("noise", "noise_mean_zero", np.abs(spectral.mean_value(q)).max(), 1e-15))

    mult = replace(noise, multiplicative_gain=0.7)
    l0 = hilbert_schmidt_bound(mult, basis, cfg.alpha)
    hs = hilbert_schmidt_norm_sq(v, mult, cfg.alpha, basis)
    nv2 = sobolev_norm(v, cfg.alpha) ** 2
    out.append(_le("noise", "hilbert_schmidt_growth", hs / (l0 * (1.0 + nv2)), 1.0))

    lip = mult.multiplicative_gain * float(
        np.sqrt((spectral_weights(mult, basis) ** 2 * basis.h_norm_sq(cfg.alpha)).sum())
    )
    worst = 0.0
    for _ in range(5):
        v1 = diagnostics.solenoidal_band_limited_field(grid, 3, rng)
        v2 = diagnostics.solenoidal_band_limited_field(grid, 3, rng)
        e = rng.standard_normal(mult.n_modes)
        e /= np.linalg.norm(e)
        inc_e = NoiseIncrement(dW=e, dEta=0.0)
        q1 = apply_velocity_noise(v1, inc_e, mult, cfg.alpha, basis)
        q2 = apply_velocity_noise(v2, inc_e, mult, cfg.alpha, basis)
        dv = sobolev_norm(SpectralField(grid, v1.coeffs - v2.coeffs), cfg.alpha)
        dq = sobolev_norm(SpectralField(grid, q1.coeffs - q2.coeffs), cfg.alpha)
        if dv > 0:
            worst = max(worst, dq / (lip * dv))
    out.append(_le("noise", "lipschitz_ratio", worst, 1.0 + 1e-12))
    return out


def integrator_suite(cfg: SolverConfig, ito_correction_sign: float = 1.0) -> list[CheckResult]:
    out: list[CheckResult] = []
    grid = cfg.grid
    rng = np.random.Generator(np.random.Philox(key=[404, 40]))

    d = diagnostics.band_limited_field(grid, 3, 3, rng)
    h = build_h_field(cfg)
    before = np.sqrt((to_physical(d) ** 2).sum(0))
    after = np.sqrt((to_physical(step_director_noise_rotation(d, h, 0.31)) ** 2).sum(0))
    iso = float(np.abs(after - before).max() / (before.max() + 1e-300))
    out.append(_le("integrator", "rotation_isometry", iso, 1e-14))

    short = cfg.with_overrides(
        scheme=replace(cfg.scheme, t_max=min(cfg.scheme.t_max, 50 * cfg.scheme.dt))
    )
    rec1 = run_trajectory(short, trajectory_id=0)
    rec2 = run_trajectory(short, trajectory_id=0)
    out.append(_le("integrator", "worst_step_divergence_ratio", max(rec1.div_ratio), 1e-12))
    out.append(
        _le(
            "integrator",
            "trajectory_determinism",
            0.0 if rec1.diagnostics_csv() == rec2.diagnostics_csv() else 1.0,
            0.0,
        )
    )
    taus = rec1.tau_list
    monotone = all(b >= a for a, b in zip(taus, taus[1:]))
    out.append(_le("integrator", "tau_monotonicity", 0.0 if monotone else 1.0, 0.0))

    weak = weak_ito_stratonovich_study(
        (0.04, 0.02, 0.01, 0.005),
        n_paths=8000,
        t_final=1.0,
        ito_correction_sign=ito_correction_sign,
    )
    out.append(_ge("integrator", "ito_stratonovich_weak_slope", weak.slope, 0.9))
    return out


def diagnostics_suite(cfg: SolverConfig, seed: int = 505) -> list[CheckResult]:
    grid = cfg.grid
    rng = np.random.Generator(np.random.Philox(key=[seed, 50]))
    out: list[CheckResult] = []

    base = diagnostics.band_limited_field(grid, 3, 2, rng, amplitude=0.4)
    e3 = np.zeros((3,) + grid.shape)
    e3[2] = 1.0
    d = to_spectral(grid, e3 + to_physical(base))
    y_minus = diagnostics.constraint_report(d).y_minus
    sweep = [diagnostics.psi_ell(d, ell) for ell in (10.0, 100.0, 1e3, 1e4)]
    gaps = [abs(p - y_minus) for p in sweep]
    out.append(_le("diagnostics", "psi_ell_gap_at_1e4", gaps[-1], 1e-6))
    monotone = all(b <= a + 1e-15 for a, b in zip(gaps, gaps[1:]))
    out.append(_le("diagnostics", "psi_ell_monotone", 0.0 if monotone else 1.0, 0.0))

    smooth = diagnostics.band_limited_field(grid, 3, max(2, grid.n // 8), rng)
    g_res, l_res = diagnostics.vector_identity_residuals(smooth)
    scale = sobolev_norm(smooth, 2.0) ** 2
    out.append(_le("diagnostics", "gradient_identity", g_res / scale, 1e-8))
    out.append(_le("diagnostics", "laplace_identity", l_res / scale, 1e-8))

    # pathwise localized bound for the constraint energies from sub-unit
    # data, noise off: with N = sup_t ||grad d||_inf read from the run,
    # y(t) <= y(0) exp(4 N^2 t) + O(dt) and z stays at its zero initial
    # value up to O(dt).  Uniformly shrunk directors make y itself grow
    # (the reaction term feeds the deficit), so only the localized form is
    # a sound invariant.
    quiet = cfg.with_overrides(
        noise=replace(cfg.noise, sigma=0.0),
        h_constant=(0.0, 0.0, 0.0),
        h_terms=(),
        scheme=replace(cfg.scheme, t_max=min(0.1, cfg.scheme.t_max), renormalize_director=False),
        velocity_amplitude=0.1,
    )
    sub_unit = to_spectral(
        grid, 0.8 * to_physical(initial_state(grid, 0.0, 0.2).d)
    )
    y0 = SystemState(
        0.0,
        initial_state(grid, quiet.velocity_amplitude, 0.0).v,
        sub_unit,
    )
    rec = run_trajectory(quiet, initial=y0, keep_states=True)
    grad_sup = max(
        float(np.sqrt((nonlinear.jacobian_physical(s.d) ** 2).sum(axis=(0, 1))).max())
        for s in rec.states
    )
    times = np.array(rec.times)
    y_series = np.array(rec.y_minus)
    envelope = y_series[0] * np.exp(4.0 * grad_sup**2 * times)
    slack = 10.0 * quiet.scheme.dt * (1.0 + y_series[0])
    out.append(
        _le(
            "diagnostics",
            "y_minus_gronwall_envelope",
            float((y_series - envelope).max()),
            slack,
        )
    )
    out.append(_le("diagnostics", "z_plus_from_subunit_data", max(rec.z_plus), slack))
    return out


def run_all_checks(
    cfg: SolverConfig, ito_correction_sign: float = 1.0
) -> tuple[list[CheckResult], bool]:
    results: list[CheckResult] = []
    results += spectral_suite(cfg)
    results += nonlinear_suite(cfg)
    results += noise_suite(cfg)
    results += integrator_suite(cfg, ito_correction_sign)
    results += diagnostics_suite(cfg)
    return results, all(r.passed for r in results)


def format_report(results: list[CheckResult]) -> str:
    lines = ["suite,name,value,bound,kind,passed"]
    for r in results:
        lines.append(
            f"{r.suite},{r.name},{r.value:.17g},{r.bound:.17g},{r.kind},{int(r.passed)}"
        )
    return "\n".join(lines) + "\n"


def human_report(results: list[CheckResult]) -> str:
    width = max(len(f"{r.suite}.{r.name}") for r in results)
    lines = []
    for r in results:
        rel = "<=" if r.kind == "max" else ">="
        status = "pass" if r.passed else "FAIL"
        lines.append(
            f"{r.suite + '.' + r.name:<{width}}  {r.value:12.5g} {rel} {r.bound:<12.5g} {status}"
        )
    return "\n".join(lines)
