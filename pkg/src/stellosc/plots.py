"""Figure rendering for CLI reports (headless, deterministic PNG files)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# no Software/timestamp metadata, so re-runs produce identical bytes
_SAVEARGS = {"dpi": 130, "metadata": {"Software": None}}


def save_solution_figure(solution, path):
    fields = [name for name in ("u", "v", "psi") if name in solution.nodal]
    fig, axes = plt.subplots(len(fields), 1, figsize=(7, 2.6 * len(fields)), sharex=True)
    axes = np.atleast_1d(axes)
    labels = {"u": "radial displacement u_r", "v": "atmosphere potential v", "psi": "gravity potential psi"}
    for ax, name in zip(axes, fields):
        nodes, vals = solution.nodal[name]
        ax.plot(nodes, vals.real, label="Re", lw=1.2)
        ax.plot(nodes, vals.imag, label="Im", lw=1.2, ls="--")
        ax.set_ylabel(labels[name])
        ax.legend(loc="best", fontsize=8)
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("radius r")
    fig.tight_layout()
    fig.savefig(path, **_SAVEARGS)
    plt.close(fig)


def save_convergence_figure(study, path):
    fig, ax = plt.subplots(figsize=(6, 4.2))
    hs = study["hs"]
    for key, marker in (("u", "o"), ("v", "s")):
        errs = [row["error"] for row in study[key]]
        ax.loglog(hs, errs, marker=marker, label=f"relative L2 error: {key}")
    ref = [study["u"][0]["error"] * (h / hs[0]) ** 2 for h in hs]
    ax.loglog(hs, ref, "k:", label="h^2 reference")
    ax.set_xlabel("mesh size h")
    ax.set_ylabel("error")
    ax.legend()
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, **_SAVEARGS)
    plt.close(fig)


def save_sweep_figure(rows, path, xlabel="truncation radius R", ylabel="interior relative L2 difference"):
    fig, ax = plt.subplots(figsize=(6, 4.2))
    xs = [row.get("R", row.get("G")) for row in rows]
    ys = [row.get("rel_l2_interior", row.get("rel_l2_vs_cowling")) for row in rows]
    ax.semilogy(xs, ys, "o-")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, **_SAVEARGS)
    plt.close(fig)


def save_phase_profile_figure(profiles, path):
    fig, ax = plt.subplots(figsize=(6, 4.2))
    hi = max((p.r3 or p.r2) for p in profiles) * 1.4
    rs = np.linspace(0.0, hi, 600)
    for prof in profiles:
        ax.plot(rs, prof.mu(rs), label=f"{prof.variant} (plateau {prof.plateau:.3f})")
    for prof in profiles[:1]:
        for r, name in ((prof.r1, "r1"), (prof.r2, "r2")):
            ax.axvline(r, color="gray", lw=0.6, ls=":")
            ax.text(r, ax.get_ylim()[1] * 0.02, name, fontsize=8)
    ax.set_xlabel("radius r")
    ax.set_ylabel("phase profile")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVEARGS)
    plt.close(fig)
