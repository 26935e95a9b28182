#!/usr/bin/env python3
"""Plot the CSV tables written by `cpalab reproduce`."""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def plot_snr(d: Path, out: Path) -> None:
    df = pd.read_csv(d / "fig2_snr.csv")
    fig, ax = plt.subplots()
    for tau, g in df.groupby("tau"):
        g = g[g["snr"] != float("inf")]
        ax.errorbar(g["n_pe"], g["snr"], yerr=g["se"], label=f"tau={tau}", capsize=2)
    ax.set_xlabel("n_pe")
    ax.set_ylabel("SNR")
    ax.set_yscale("log")
    ax.legend()
    fig.savefig(out / "fig2_snr.png", dpi=150)


def plot_cross_pe(d: Path, out: Path) -> None:
    df = pd.read_csv(d / "fig3_cross_pe.csv")
    fig, ax = plt.subplots()
    ax.plot(df["tau"], df["max_abs_rho"], marker="o")
    ax.set_xlabel("tau")
    ax.set_ylabel("max |rho| between PEs")
    fig.savefig(out / "fig3_cross_pe.png", dpi=150)


def plot_curves(d: Path, out: Path, prefix: str) -> None:
    files = sorted(d.glob(f"{prefix}_tau*.csv"))
    if not files:
        return
    fig, ax = plt.subplots()
    for f in files:
        df = pd.read_csv(f)
        tau = f.stem.split("tau")[-1]
        if "rho_normal" in df:
            ax.plot(df["n_pe"], df["rho_normal"], label=f"normal weights, tau={tau}")
            ax.plot(df["n_pe"], df["rho_uniform"], linestyle=":", label=f"uniform weights, tau={tau}")
            continue
        ax.errorbar(df["n_pe"], df["rho"], yerr=df["se"], label=f"correct, tau={tau}", capsize=2)
        ax.plot(df["n_pe"], df["best_incorrect"], linestyle="--", label=f"best incorrect, tau={tau}")
    ax.set_xlabel("n_pe")
    ax.set_ylabel("|rho|")
    ax.legend(fontsize="small")
    fig.savefig(out / f"{prefix}.png", dpi=150)


def plot_bins(d: Path, out: Path) -> None:
    df = pd.read_csv(d / "fig5_bins.csv")
    fig, ax = plt.subplots()
    ax.fill_between(df["snr_center"], df["envelope_min"], df["envelope_max"], alpha=0.3, label="envelope over tau")
    ax.plot(df["snr_center"], df["rho"], label="correct")
    ax.plot(df["snr_center"], df["best_incorrect"], linestyle="--", label="best incorrect")
    ax.set_xscale("log")
    ax.set_xlabel("SNR")
    ax.set_ylabel("|rho|")
    ax.legend()
    fig.savefig(out / "fig5_bins.png", dpi=150)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("dir", type=Path, help="output directory of cpalab reproduce")
    p.add_argument("--out", type=Path, help="where to write PNG files (default: DIR)")
    args = p.parse_args()
    out = args.out or args.dir
    out.mkdir(parents=True, exist_ok=True)
    plots = {
        "fig2_snr.csv": lambda: plot_snr(args.dir, out),
        "fig3_cross_pe.csv": lambda: plot_cross_pe(args.dir, out),
        "fig5_bins.csv": lambda: plot_bins(args.dir, out),
    }
    for name, fn in plots.items():
        if (args.dir / name).exists():
            fn()
    for prefix in ("fig4", "appendixA", "appendixC"):
        plot_curves(args.dir, out, prefix)


if __name__ == "__main__":
    main()
