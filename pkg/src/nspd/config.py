"""Solver configuration: flat sectioned key-value files, validation with
named violations, canonical serialization, and config hashing."""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .noise import NoiseConfig, validate_noise_config
from .spectral import Grid, SpectralField, to_spectral


class ConfigError(ValueError):
    """Carries a list of (field, constraint, value) violations."""

    def __init__(self, violations: list[tuple[str, str, str]]):
        self.violations = violations
        lines = [f"  {f}: {c} (got {v})" for f, c, v in violations]
        super().__init__("invalid configuration:\n" + "\n".join(lines))


@dataclass(frozen=True)
class SchemeSpec:
    variant: str = "stratonovich_rotation"
    renormalize_director: bool = False
    dt: float = 1e-3
    t_max: float = 1.0

    def __post_init__(self) -> None:
        if self.variant not in ("stratonovich_rotation", "ito_plus_correction"):
            raise ValueError(f"unknown scheme variant {self.variant!r}")
        if not 0 < self.dt <= self.t_max:
            raise ValueError(f"need 0 < dt <= t_max, got dt={self.dt}, t_max={self.t_max}")


@dataclass(frozen=True)
class HTerm:
    """One trigonometric term of the applied field: amp * fn(k.x) * e_comp."""

    comp: int
    amplitude: float
    fn: str  # "cos" or "sin"
    kvec: tuple[int, ...]


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid = Grid(dim=2, n=64)
    alpha: float = 2.0
    lam: float = 1.0
    gamma: float = 1.0
    scheme: SchemeSpec = SchemeSpec()
    noise: NoiseConfig = NoiseConfig()
    h_constant: tuple[float, ...] = (0.0, 0.0, 1.0)
    h_terms: tuple[HTerm, ...] = (
        HTerm(comp=0, amplitude=0.5, fn="cos", kvec=(1, 0)),
        HTerm(comp=1, amplitude=0.5, fn="sin", kvec=(0, 1)),
    )
    velocity_amplitude: float = 0.1
    director_epsilon: float = 0.1
    thresholds: tuple[float, ...] = (10.0, 20.0, 40.0)
    out_dir: str = "out"
    snapshot_stride: int = 0
    n_traj: int = 8

    def with_overrides(self, **kwargs) -> "SolverConfig":
        return replace(self, **kwargs)


def default_config() -> SolverConfig:
    return SolverConfig()


def _violations(cfg: SolverConfig) -> list[tuple[str, str, str]]:
    v: list[tuple[str, str, str]] = []
    dim = cfg.grid.dim
    if not cfg.alpha > dim / 2.0:
        v.append(("model.alpha", f"alpha must exceed dim/2 = {dim / 2.0}", str(cfg.alpha)))
    for name, val in (("model.lambda", cfg.lam), ("model.gamma", cfg.gamma)):
        if not np.isfinite(val):
            v.append((name, "must be finite", str(val)))
    if not np.isfinite(cfg.velocity_amplitude) or not np.isfinite(cfg.director_epsilon):
        v.append(("initial_data", "amplitudes must be finite", ""))
    if len(cfg.thresholds) == 0 or any(m <= 0 for m in cfg.thresholds):
        v.append(("stopping.thresholds", "must be positive", str(cfg.thresholds)))
    elif any(b <= a for a, b in zip(cfg.thresholds, cfg.thresholds[1:])):
        v.append(("stopping.thresholds", "must be strictly increasing", str(cfg.thresholds)))
    kmax = cfg.grid.k_max_retained
    stiff = cfg.scheme.dt * kmax**2 * max(cfg.gamma, 1.0)
    if stiff > 50.0:
        v.append(
            ("scheme.dt", f"dt * k_max^2 = {stiff:.1f} exceeds 50 (under-resolved)", str(cfg.scheme.dt))
        )
    try:
        validate_noise_config(cfg.noise, cfg.alpha, cfg.grid)
    except ValueError as exc:
        v.append(("noise", str(exc), ""))
    for i, term in enumerate(cfg.h_terms):
        if term.comp not in (0, 1, 2):
            v.append((f"magnetic_field.terms[{i}]", "component must be 0..2", str(term.comp)))
        if term.fn not in ("cos", "sin"):
            v.append((f"magnetic_field.terms[{i}]", "fn must be cos or sin", term.fn))
        if len(term.kvec) != dim:
            v.append((f"magnetic_field.terms[{i}]", f"wavevector needs {dim} entries", str(term.kvec)))
    if len(cfg.h_constant) != 3:
        v.append(("magnetic_field.constant", "needs 3 entries", str(cfg.h_constant)))
    if cfg.snapshot_stride < 0:
        v.append(("output.snapshot_stride", "must be >= 0", str(cfg.snapshot_stride)))
    if cfg.n_traj < 1:
        v.append(("ensemble.n_traj", "must be >= 1", str(cfg.n_traj)))
    return v


def validate_config(cfg: SolverConfig) -> SolverConfig:
    violations = _violations(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_config(cfg: SolverConfig) -> str:
    """Canonical text form; parsing it back reproduces the config exactly."""
    terms = " ".join(
        f"{t.comp}:{_fmt(t.amplitude)}:{t.fn}:{','.join(str(k) for k in t.kvec)}"
        for t in cfg.h_terms
    )
    return "\n".join(
        [
            "[grid]",
            f"dim = {cfg.grid.dim}",
            f"n_per_axis = {cfg.grid.n}",
            f"dealias_fraction = {_fmt(cfg.grid.dealias_fraction)}",
            "",
            "[model]",
            f"alpha = {_fmt(cfg.alpha)}",
            f"lambda = {_fmt(cfg.lam)}",
            f"gamma = {_fmt(cfg.gamma)}",
            "",
            "[scheme]",
            f"variant = {cfg.scheme.variant}",
            f"renormalize_director = {'true' if cfg.scheme.renormalize_director else 'false'}",
            f"dt = {_fmt(cfg.scheme.dt)}",
            f"t_max = {_fmt(cfg.scheme.t_max)}",
            "",
            "[noise]",
            f"n_modes = {cfg.noise.n_modes}",
            f"sigma = {_fmt(cfg.noise.sigma)}",
            f"decay_s = {_fmt(cfg.noise.decay_s)}",
            f"multiplicative_gain = {_fmt(cfg.noise.multiplicative_gain)}",
            f"seed = {cfg.noise.seed}",
            "",
            "[magnetic_field]",
            f"constant = {' '.join(_fmt(c) for c in cfg.h_constant)}",
            f"terms = {terms}",
            "",
            "[initial_data]",
            f"velocity_amplitude = {_fmt(cfg.velocity_amplitude)}",
            f"director_epsilon = {_fmt(cfg.director_epsilon)}",
            "",
            "[stopping]",
            f"thresholds = {' '.join(_fmt(m) for m in cfg.thresholds)}",
            "",
            "[ensemble]",
            f"n_traj = {cfg.n_traj}",
            "",
            "[output]",
            f"directory = {cfg.out_dir}",
            f"snapshot_stride = {cfg.snapshot_stride}",
            "",
        ]
    )


def config_hash(cfg: SolverConfig) -> str:
    """Hash of the experiment definition; the output destination is
    normalized out so relocated runs stay comparable."""
    canonical = serialize_config(cfg.with_overrides(out_dir=""))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


_KNOWN_KEYS = {
    "grid": {"dim", "n_per_axis", "dealias_fraction"},
    "model": {"alpha", "lambda", "gamma"},
    "scheme": {"variant", "renormalize_director", "dt", "t_max"},
    "noise": {"n_modes", "sigma", "decay_s", "multiplicative_gain", "seed"},
    "magnetic_field": {"constant", "terms"},
    "initial_data": {"velocity_amplitude", "director_epsilon"},
    "stopping": {"thresholds"},
    "ensemble": {"n_traj"},
    "output": {"directory", "snapshot_stride"},
}


def _parse_fraction(text: str) -> float:
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "on", "yes", "1"):
        return True
    if text.lower() in ("false", "off", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_terms(text: str) -> tuple[HTerm, ...]:
    terms = []
    for tok in text.split():
        comp, amp, fn, kvec = tok.split(":")
        terms.append(
            HTerm(
                comp=int(comp),
                amplitude=float(amp),
                fn=fn,
                kvec=tuple(int(k) for k in kvec.split(",")),
            )
        )
    return tuple(terms)


def parse_config(text: str) -> SolverConfig:
    """Parse the sectioned key-value format, fill defaults, validate."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([("<file>", "unparseable", str(exc))]) from exc

    violations: list[tuple[str, str, str]] = []
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            violations.append((section, "unknown section", ""))
            continue
        for key in parser[section]:
            if key not in _KNOWN_KEYS[section]:
                violations.append((f"{section}.{key}", "unknown key", parser[section][key]))
    if violations:
        raise ConfigError(violations)

    defaults = default_config()

    def get(section: str, key: str, conv, fallback):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                return conv(raw)
            except (ValueError, TypeError) as exc:
                violations.append((f"{section}.{key}", str(exc), raw))
                return fallback
        return fallback

    dim = get("grid", "dim", int, defaults.grid.dim)
    n = get("grid", "n_per_axis", int, defaults.grid.n)
    fraction = get("grid", "dealias_fraction", _parse_fraction, defaults.grid.dealias_fraction)
    try:
        grid = Grid(dim=dim, n=n, dealias_fraction=fraction)
    except ValueError as exc:
        violations.append(("grid", str(exc), f"dim={dim}, n={n}"))
        grid = defaults.grid

    # default h terms only make sense in the default dimension
    default_terms = defaults.h_terms if grid.dim == 2 else tuple(
        replace(t, kvec=t.kvec + (0,)) for t in defaults.h_terms
    )

    try:
        scheme = SchemeSpec(
            variant=get("scheme", "variant", str, defaults.scheme.variant),
            renormalize_director=get(
                "scheme", "renormalize_director", _parse_bool, defaults.scheme.renormalize_director
            ),
            dt=get("scheme", "dt", float, defaults.scheme.dt),
            t_max=get("scheme", "t_max", float, defaults.scheme.t_max),
        )
    except ValueError as exc:
        violations.append(("scheme", str(exc), ""))
        scheme = defaults.scheme

    try:
        noise = NoiseConfig(
            n_modes=get("noise", "n_modes", int, defaults.noise.n_modes),
            sigma=get("noise", "sigma", float, defaults.noise.sigma),
            decay_s=get("noise", "decay_s", float, defaults.noise.decay_s),
            multiplicative_gain=get(
                "noise", "multiplicative_gain", float, defaults.noise.multiplicative_gain
            ),
            seed=get("noise", "seed", int, defaults.noise.seed),
        )
    except ValueError as exc:
        violations.append(("noise", str(exc), ""))
        noise = defaults.noise

    cfg = SolverConfig(
        grid=grid,
        alpha=get("model", "alpha", float, defaults.alpha),
        lam=get("model", "lambda", float, defaults.lam),
        gamma=get("model", "gamma", float, defaults.gamma),
        scheme=scheme,
        noise=noise,
        h_constant=get(
            "magnetic_field",
            "constant",
            lambda s: tuple(float(c) for c in s.split()),
            defaults.h_constant,
        ),
        h_terms=get("magnetic_field", "terms", _parse_terms, default_terms),
        velocity_amplitude=get(
            "initial_data", "velocity_amplitude", float, defaults.velocity_amplitude
        ),
        director_epsilon=get(
            "initial_data", "director_epsilon", float, defaults.director_epsilon
        ),
        thresholds=get(
            "stopping",
            "thresholds",
            lambda s: tuple(float(m) for m in s.split()),
            defaults.thresholds,
        ),
        out_dir=get("output", "directory", str, defaults.out_dir),
        snapshot_stride=get("output", "snapshot_stride", int, defaults.snapshot_stride),
        n_traj=get("ensemble", "n_traj", int, defaults.n_traj),
    )
    if violations:
        raise ConfigError(violations)
    return validate_config(cfg)


def read_config(path: str) -> SolverConfig:
    with io.open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def build_h_field(cfg: SolverConfig) -> SpectralField:
    """Assemble the applied field h as a 3-component trigonometric polynomial."""
    grid = cfg.grid
    xs = grid.meshgrid()
    samples = np.zeros((3,) + grid.shape)
    for c in range(3):
        samples[c] = cfg.h_constant[c]
    for term in cfg.h_terms:
        phase = sum(k * x for k, x in zip(term.kvec, xs))
        fn = np.cos if term.fn == "cos" else np.sin
        samples[term.comp] += term.amplitude * fn(phase)
    return to_spectral(grid, samples)
