"""Matplotlib renderings of the report payloads.

Figures are an optional companion to the CSV output (--figures on the CLI);
every renderer writes a PNG next to the delimited file and returns the path.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_profile(profile, path, title: str = ""):
    """Step plot of the chain-multiplicity profile."""
    fig, ax = plt.subplots(figsize=(8, 4))
    xs, ys = [], []
    for lo, hi, c in profile.rows():
        xs.extend([lo, hi])
        ys.extend([c, c])
    ax.plot(xs, ys, drawstyle="steps-post", lw=0.8)
    ax.fill_between(xs, ys, step="post", alpha=0.25)
    ax.set_xlabel("x")
    ax.set_ylabel(f"chain count at depth {profile.n}")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_convergence(report, path, title: str = ""):
    """Per-symbol log chain-count average against depth, with 99% bars."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = [e.n for e in report.estimates]
    a = [e.a_n for e in report.estimates]
    err = [2.5758 * e.std_err for e in report.estimates]
    ax.errorbar(ns, a, yerr=err, fmt="o-", capsize=3)
    ax.set_xlabel("chain depth n")
    ax.set_ylabel("a_n = mean(log beta_n)/n")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_sweep(rows, path, title: str = ""):
    """Overlap estimates and dimension bounds across the contraction grid."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    lams = [r["lambda"] for r in rows]
    ax1.plot(lams, [r["o_hat"] for r in rows], "o-", label="estimate")
    ax1.plot(lams, [r["o_upper_variant"] for r in rows], "s--", label="upper variant")
    ax1.axhline(2.0, color="gray", lw=0.8, ls=":")
    ax1.set_xlabel("lambda")
    ax1.set_ylabel("overlap number")
    ax1.legend()
    ax2.plot(lams, [r["hd_bound_raw"] for r in rows], "o-", label="raw")
    ax2.plot(lams, [r["hd_bound_clamped"] for r in rows], "s--", label="clamped")
    ax2.set_xlabel("lambda")
    ax2.set_ylabel("dimension bound")
    ax2.legend()
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
