"""Trajectory records, CSV emission, and the binary snapshot format."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .fields import PathNorm, path_norm_from_series
from .spectral import Grid, SpectralField, to_physical, to_spectral

STATUS_COMPLETED = "completed"
STATUS_STOPPED = "stopped_at_threshold"
STATUS_FAILED = "numerical_failure"

EXIT_CODES = {STATUS_COMPLETED: 0, STATUS_STOPPED: 2, STATUS_FAILED: 3}

# column -> unit; everything is nondimensional on the torus
TRAJECTORY_COLUMNS = [
    ("t", "-"),
    ("v_alpha_norm", "-"),
    ("e_alpha_norm", "-"),
    ("max_constraint_dev", "-"),
    ("y_minus", "-"),
    ("z_plus", "-"),
    ("kinetic_energy", "-"),
    ("div_ratio", "-"),
]


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class TrajectoryRecord:
    """Per-step diagnostics of one trajectory plus stopping bookkeeping."""

    config_hash: str
    alpha: float
    thresholds: tuple[float, ...]
    times: list[float] = field(default_factory=list)
    v_alpha: list[float] = field(default_factory=list)
    e_alpha: list[float] = field(default_factory=list)
    max_constraint_dev: list[float] = field(default_factory=list)
    y_minus: list[float] = field(default_factory=list)
    z_plus: list[float] = field(default_factory=list)
    kinetic_energy: list[float] = field(default_factory=list)
    div_ratio: list[float] = field(default_factory=list)
    tau: dict[float, float] = field(default_factory=dict)  # threshold -> first crossing
    status: str = STATUS_COMPLETED
    snapshots: list[tuple[float, np.ndarray, np.ndarray]] = field(default_factory=list)
    states: list = field(default_factory=list)  # populated only with keep_states

    def append_row(
        self,
        t: float,
        v_alpha: float,
        e_alpha: float,
        max_dev: float,
        y_minus: float,
        z_plus: float,
        kinetic: float,
        div_ratio: float,
    ) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("record times must be strictly increasing")
        self.times.append(t)
        self.v_alpha.append(v_alpha)
        self.e_alpha.append(e_alpha)
        self.max_constraint_dev.append(max_dev)
        self.y_minus.append(y_minus)
        self.z_plus.append(z_plus)
        self.kinetic_energy.append(kinetic)
        self.div_ratio.append(div_ratio)

    @property
    def tau_list(self) -> list[float]:
        """Crossing times ordered by threshold (only crossed ones)."""
        return [self.tau[m] for m in sorted(self.tau)]

    def path_norm(self) -> PathNorm:
        return path_norm_from_series(
            np.array(self.times), np.array(self.v_alpha), np.array(self.e_alpha)
        )

    def diagnostics_csv(self) -> str:
        header = ",".join(f"{name} [{unit}]" for name, unit in TRAJECTORY_COLUMNS)
        lines = [f"# config_hash={self.config_hash}", header]
        rows = zip(
            self.times,
            self.v_alpha,
            self.e_alpha,
            self.max_constraint_dev,
            self.y_minus,
            self.z_plus,
            self.kinetic_energy,
            self.div_ratio,
        )
        for row in rows:
            lines.append(",".join(_fmt(x) for x in row))
        return "\n".join(lines) + "\n"

    def crossings_csv(self) -> str:
        lines = [f"# config_hash={self.config_hash}", "threshold [-],tau [-],crossed [bool]"]
        for m in self.thresholds:
            if m in self.tau:
                lines.append(f"{_fmt(m)},{_fmt(self.tau[m])},1")
            else:
                lines.append(f"{_fmt(m)},nan,0")
        lines.append(f"# status={self.status}")
        return "\n".join(lines) + "\n"


def parse_diagnostics_csv(text: str) -> dict[str, np.ndarray]:
    """Read back a diagnostics CSV, validating the column schema."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    expected = ",".join(f"{name} [{unit}]" for name, unit in TRAJECTORY_COLUMNS)
    if not lines or lines[0] != expected:
        raise ValueError(f"bad diagnostics header: {lines[0] if lines else '<empty>'!r}")
    data = np.array([[float(tok) for tok in ln.split(",")] for ln in lines[1:]])
    if data.size == 0:
        data = data.reshape(0, len(TRAJECTORY_COLUMNS))
    return {name: data[:, i] for i, (name, _) in enumerate(TRAJECTORY_COLUMNS)}


# ---------------------------------------------------------------------------
# Binary snapshots: magic "NSPD1\0", little-endian u32 dim, u32 components,
# u32 n_per_axis, u64 payload bytes, then float64 physical samples in
# row-major order with the component index fastest (component-minor).

SNAPSHOT_MAGIC = b"NSPD1\x00"
_HEADER = struct.Struct("<6sIIIQ")


class SnapshotFormatError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


def write_snapshot(f: SpectralField, path: str) -> None:
    samples = to_physical(f)
    payload = np.ascontiguousarray(np.moveaxis(samples, 0, -1), dtype="<f8").tobytes()
    header = _HEADER.pack(
        SNAPSHOT_MAGIC, f.grid.dim, f.components, f.grid.n, len(payload)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_snapshot(path: str, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError("truncated header", len(raw))
    magic, dim, components, n, payload_len = _HEADER.unpack_from(raw, 0)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotFormatError("bad magic", 0)
    expected = components * n**dim * 8
    if payload_len != expected:
        raise SnapshotFormatError(
            f"payload length {payload_len} != {expected} for dim={dim} "
            f"components={components} n={n}",
            6,
        )
    if len(raw) != _HEADER.size + payload_len:
        raise SnapshotFormatError(
            f"truncated payload: have {len(raw) - _HEADER.size} of {payload_len} bytes",
            len(raw),
        )
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    samples = np.moveaxis(flat.reshape((n,) * dim + (components,)), -1, 0)
    grid = Grid(dim=dim, n=n, dealias_fraction=dealias_fraction)
    return to_spectral(grid, samples)
