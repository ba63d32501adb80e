"""Figure rendering for the report paths; every figure lands next to the
CSV it visualizes."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import SurvivalCurve
from .records import TrajectoryRecord
from .studies import StudyResult

_SAVEFIG = {"dpi": 140, "bbox_inches": "tight"}


def trajectory_figure(record: TrajectoryRecord, path: str) -> None:
    t = np.array(record.times)
    fig, axes = plt.subplots(3, 1, figsize=(6.4, 7.2), sharex=True)

    axes[0].plot(t, record.v_alpha, label=r"$V_\alpha$ norm")
    axes[0].plot(t, record.e_alpha, label=r"$E_\alpha$ norm", alpha=0.7)
    for m, tau in sorted(record.tau.items()):
        axes[0].axvline(tau, color="crimson", ls="--", lw=0.8)
        axes[0].axhline(m, color="crimson", ls=":", lw=0.5)
    axes[0].set_ylabel("state norms")
    axes[0].legend(loc="best", fontsize=8)

    axes[1].semilogy(t, np.maximum(record.max_constraint_dev, 1e-18), label=r"max $||d|^2-1|$")
    axes[1].semilogy(t, np.maximum(record.y_minus, 1e-18), label=r"$y_-$")
    axes[1].semilogy(t, np.maximum(record.z_plus, 1e-18), label=r"$z_+$")
    axes[1].set_ylabel("constraint deviation")
    axes[1].legend(loc="best", fontsize=8)

    axes[2].plot(t, record.kinetic_energy)
    axes[2].set_ylabel(r"$\|v\|_{L^2}^2$")
    axes[2].set_xlabel("t")
    fig.suptitle(f"trajectory ({record.status})", fontsize=10)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def survival_figure(curves: dict[float, SurvivalCurve], path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for amp, curve in sorted(curves.items(), key=lambda kv: kv[0]):
        label = "survival" if np.isnan(amp) else f"amplitude {amp:g}"
        ax.step(curve.t_grid, curve.survival, where="post", label=label)
        ax.fill_between(
            curve.t_grid, curve.wilson_low, curve.wilson_high, step="post", alpha=0.2
        )
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\hat P(\tau_{top} \geq t)$")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def convergence_figure(results: list[StudyResult], path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.4))
    for res in results:
        dts = np.array(res.dts)
        ax.loglog(dts, res.errors, "o-", label=f"{res.name} (slope {res.slope:.2f})")
    if results:
        dts = np.array(results[0].dts)
        anchor = results[0].errors[0]
        ax.loglog(dts, anchor * (dts / dts[0]), "k--", lw=0.8, label="order 1")
    ax.set_xlabel("dt")
    ax.set_ylabel("error")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
