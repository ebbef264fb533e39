"""Figure rendering for experiment reports (PNG next to the CSV)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_snr_figure(report, path) -> None:
    snrs = report.column("snr_db")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.semilogy(snrs, report.column("err_pct_rs"), "o-", label="RS coding")
    ax.semilogy(snrs, report.column("err_pct_cp"), "s--", color="tab:red", label="cross-parity")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("output error (%)")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sparsity_figure(report, path) -> None:
    levels = [f"{lv:.0%}" for lv in report.column("sparsity_level")]
    rs_time = report.column("max_worker_time_rs")
    cp_time = report.column("max_worker_time_cp")
    idx = range(len(levels))
    width = 0.38
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar([i - width / 2 for i in idx], rs_time, width, label="RS coding")
    ax.bar([i + width / 2 for i in idx], cp_time, width, color="tab:cyan", label="cross-parity")
    ax.set_xticks(list(idx), levels)
    ax.set_xlabel("sparsity level")
    ax.set_ylabel("max worker cost" + (" (s)" if report.config.get("clock") == "wall" else " (nnz units)"))
    ax.grid(True, axis="y", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
