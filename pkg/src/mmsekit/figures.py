"""Offscreen rendering of bound-vs-MMSE comparison figures.

One figure per experiment: MMSE and the variance-based lower bound against
noise variance on a log axis, with the Cramer-Rao baseline when the prior
admits one and the prior variance as the high-noise reference level.
Rendering uses the Agg backend so it works headless; the CSV written next
to the image stays the authoritative numeric record.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be pinned first

__all__ = ["render_bound_figure"]


def render_bound_figure(rows, out_path: str, label: str) -> None:
    """Render one comparison figure to ``out_path``.

    ``rows`` is a sequence of dicts with the CSV column keys
    (sigma2_n, mmse, mmse_se, poincare_lb, poincare_lb_se, cramer_rao,
    variance_target); ``cramer_rao`` entries may be None.
    """
    x = [r["sigma2_n"] for r in rows]
    mmse = [r["mmse"] for r in rows]
    lb = [r["poincare_lb"] for r in rows]
    lb_se = [r["poincare_lb_se"] for r in rows]
    target = rows[0]["variance_target"]

    fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=150)
    ax.axhline(
        target, color="0.6", linestyle=":", linewidth=1.0, label="prior variance"
    )
    ax.plot(x, mmse, marker="o", color="tab:blue", label="MMSE")
    ax.plot(
        x,
        lb,
        marker="s",
        color="tab:red",
        linestyle="--",
        label="variance lower bound",
    )
    ax.fill_between(
        x,
        [v - 3 * s for v, s in zip(lb, lb_se)],
        [v + 3 * s for v, s in zip(lb, lb_se)],
        color="tab:red",
        alpha=0.15,
        linewidth=0,
    )
    cr = [r["cramer_rao"] for r in rows]
    if any(v is not None for v in cr):
        ax.plot(
            x,
            cr,
            marker="^",
            color="tab:green",
            linestyle="-.",
            label="Cramer-Rao bound",
        )
    ax.set_xscale("log")
    ax.set_xlabel("noise variance")
    ax.set_ylabel("mean squared error")
    ax.set_title(label)
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
