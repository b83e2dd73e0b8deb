"""Figure output: gnuplot data files + script stubs, and rendered PNGs.

Every figure is written three ways under ``<out>/plots``: a whitespace
delimited ``.dat`` file, a ``.gp`` script that plots it, and a ``.png``
rendered with matplotlib's Agg backend.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .runner import SweepSummary, eps_tag, read_csv  # noqa: E402

log = logging.getLogger(__name__)

STYLE = {
    "figure.figsize": (5.5, 3.8),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "savefig.dpi": 120,
}


def _write_dat(path: Path, header: list[str], blocks):
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for i, (label, rows) in enumerate(blocks):
            if i:
                fh.write("\n\n")
            if label:
                fh.write(f"# {label}\n")
            for row in rows:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def _write_gp(path: Path, dat: str, title: str, xlabel: str, ylabel: str, plot_cmds: str,
              logx=False, logy=False):
    lines = [f"# gnuplot script for {dat}",
             "set terminal pngcairo size 800,560",
             f"set output '{Path(dat).stem}_gnuplot.png'",
             f"set title '{title}'", f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'",
             "set grid"]
    if logx:
        lines.append("set logscale x")
    if logy:
        lines.append("set logscale y")
    lines.append(plot_cmds)
    path.write_text("\n".join(lines) + "\n")


def energy_vs_time(series: dict, out: Path) -> list[Path]:
    """E_eps(t) for every member; ``series`` maps epsilon -> relative_energy columns."""
    dat = out / "relative_energy_vs_t.dat"
    blocks = [(f"epsilon = {e:.6g}", np.column_stack([s["t"], s["E"]]))
              for e, s in series.items()]
    _write_dat(dat, ["t", "E"], blocks)
    cmds = ", ".join(f"'{dat.name}' index {i} using 1:2 with lines title 'eps={e:.3g}'"
                     for i, e in enumerate(series))
    gp = dat.with_suffix(".gp")
    _write_gp(gp, dat.name, "relative energy", "t", "E_eps(t)", "plot " + cmds, logy=True)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for e, s in series.items():
            ax.semilogy(s["t"][1:], np.maximum(s["E"][1:], 1e-300), label=rf"$\epsilon={e:.3g}$")
            if "E_uncorrected" in s:
                ax.semilogy(s["t"][1:], s["E_uncorrected"][1:], ls="--", lw=0.8, color="0.5")
        ax.set_xlabel("t")
        ax.set_ylabel(r"$E_\epsilon(t)$")
        ax.legend()
        fig.tight_layout()
        png = dat.with_suffix(".png")
        fig.savefig(png)
        plt.close(fig)
    return [dat, gp, png]


def final_energy_loglog(summary: SweepSummary, out: Path) -> list[Path]:
    dat = out / "final_E_loglog.dat"
    rows = np.column_stack([summary.epsilons, summary.final_E, summary.fitted_line()])
    _write_dat(dat, ["epsilon", "final_E", "fitted_line"], [("", rows)])
    gp = dat.with_suffix(".gp")
    rate = "n/a" if summary.rate is None else f"{summary.rate:.3f}"
    _write_gp(gp, dat.name, f"final relative energy, fitted rate {rate}", "epsilon", "E_eps(t_end)",
              f"plot '{dat.name}' using 1:2 with linespoints title 'measured', "
              f"'{dat.name}' using 1:3 with lines title 'C eps^p'", logx=True, logy=True)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(summary.epsilons, summary.final_E, "o-", label="measured")
        if summary.rate is not None:
            ax.loglog(summary.epsilons, summary.fitted_line(), "k--",
                      label=rf"$C\epsilon^{{{summary.rate:.2f}}}$")
        if summary.final_E_uncorrected is not None:
            ax.loglog(summary.epsilons, summary.final_E_uncorrected, "s:",
                      label="without acoustic correction")
        ax.set_xlabel(r"$\epsilon$")
        ax.set_ylabel(r"$E_\epsilon(t_{end})$")
        ax.legend()
        fig.tight_layout()
        png = dat.with_suffix(".png")
        fig.savefig(png)
        plt.close(fig)
    return [dat, gp, png]


def decay_profile(profile: dict, out: Path) -> list[Path]:
    dat = out / "acoustic_decay.dat"
    names = ["t", "local_sup_s", "local_sup_V", "global_energy"]
    _write_dat(dat, names, [("", np.column_stack([profile[n] for n in names]))])
    gp = dat.with_suffix(".gp")
    _write_gp(gp, dat.name, "acoustic local decay", "t", "local sup",
              f"plot '{dat.name}' using 1:2 with lines title 's', "
              f"'{dat.name}' using 1:3 with lines title '|V|'", logy=True)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(profile["t"], profile["local_sup_s"], label="sup |s|")
        ax.semilogy(profile["t"], profile["local_sup_V"], label="sup |V|")
        ax.set_xlabel("t")
        ax.set_ylabel("central subdomain")
        ax.legend()
        fig.tight_layout()
        png = dat.with_suffix(".png")
        fig.savefig(png)
        plt.close(fig)
    return [dat, gp, png]


def emit_plots(summary: SweepSummary | None, run_dir, series: dict | None = None,
               decay: dict | None = None) -> list[Path]:
    """Write every figure that the available artifacts support.

    ``series`` defaults to the ``relative_energy.csv`` files of the members
    under ``run_dir``.  An empty sweep writes nothing and returns ``[]``.
    """
    run_dir = Path(run_dir)
    if (summary is None or not summary.epsilons) and not decay:
        log.warning("nothing to plot: empty sweep")
        return []
    out = run_dir / "plots"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if summary is not None and summary.epsilons:
        if series is None:
            series = {}
            for e in summary.epsilons:
                f = run_dir / eps_tag(e) / "relative_energy.csv"
                if f.exists():
                    series[e] = read_csv(f)
        if series:
            written += energy_vs_time(series, out)
        if not summary.failed:
            written += final_energy_loglog(summary, out)
    if decay:
        written += decay_profile(decay, out)
    return written


def load_summary(run_dir) -> SweepSummary | None:
    f = Path(run_dir) / "summary.json"
    if not f.exists():
        return None
    return SweepSummary(**json.loads(f.read_text()))
