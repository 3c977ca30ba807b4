"""Report serialization: JSON document, per-table CSV exports, text tables, figures.

Column ``a`` of a comparison is labelled "cipher" and ``b`` "reference",
matching the two dataset classes being compared.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .metrics import RECURRENCE_BINS
from .pipeline import REPORT_SCHEMA_VERSION, ComparisonReport

CSV_FILES = ("deviation.csv", "entropy.csv", "recurrence.csv", "concentration.csv")
FIGURE_FILES = ("concentration.png", "deviation.png", "entropy.png", "recurrence.png")


def _num(x):
    """JSON/CSV-safe number: infinities become string markers, None stays None."""
    if x is None:
        return None
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return x


def report_to_dict(report: ComparisonReport) -> dict:
    scales = []
    for r in report.rows:
        scales.append({
            "m": r.m,
            "deviation": r.deviation,
            "z": _num(r.z),
            "null": r.null.to_dict() if r.null else None,
            "entropy": {
                "cipher": r.metrics_a.entropy_bits,
                "reference": r.metrics_b.entropy_bits,
                "cipher_max": r.metrics_a.entropy_max_bits,
                "reference_max": r.metrics_b.entropy_max_bits,
                "cipher_sequence_mean": r.seq_entropy_a[0],
                "cipher_sequence_std": r.seq_entropy_a[1],
                "reference_sequence_mean": r.seq_entropy_b[0],
                "reference_sequence_std": r.seq_entropy_b[1],
            },
            "concentration": {
                "cipher": _concentration(r.metrics_a),
                "reference": _concentration(r.metrics_b),
            },
            "recurrence": {
                "cipher": dict(zip(RECURRENCE_BINS, r.recurrence_a)),
                "reference": dict(zip(RECURRENCE_BINS, r.recurrence_b)),
            },
        })
    return {
        "schema": "seqprint.report",
        "schema_version": REPORT_SCHEMA_VERSION,
        "aggregation": "pooled",
        "cipher": report.identity_a,
        "reference": report.identity_b,
        "m_set": list(report.m_set),
        "fingerprint_distance": report.fingerprint_distance,
        "scales": scales,
    }


def _concentration(s) -> dict:
    return {
        "max_prob": s.max_prob,
        "repeated_window_fraction": s.repeated_window_fraction,
        "distinct_fraction": s.distinct_fraction,
    }


def csv_tables(report: ComparisonReport) -> dict:
    """File name -> (header, rows); one row per pattern length."""
    rows = report.rows
    dev = (
        ["m", "deviation", "null_mean", "null_std", "z"],
        [[r.m, r.deviation, r.null.d_mean if r.null else "", r.null.d_std if r.null else "",
          "" if r.z is None else _num(r.z)] for r in rows],
    )
    ent = (
        ["m", "cipher_entropy", "reference_entropy", "cipher_entropy_max", "reference_entropy_max",
         "cipher_seq_entropy_mean", "cipher_seq_entropy_std",
         "reference_seq_entropy_mean", "reference_seq_entropy_std"],
        [[r.m, r.metrics_a.entropy_bits, r.metrics_b.entropy_bits,
          r.metrics_a.entropy_max_bits, r.metrics_b.entropy_max_bits,
          *r.seq_entropy_a, *r.seq_entropy_b] for r in rows],
    )
    bins = [b.replace("+", "plus") for b in RECURRENCE_BINS]
    rec = (
        ["m"] + [f"cipher_r{b}" for b in bins] + [f"reference_r{b}" for b in bins],
        [[r.m, *r.recurrence_a, *r.recurrence_b] for r in rows],
    )
    conc = (
        ["m", "cipher_max_prob", "reference_max_prob",
         "cipher_repeated_window_fraction", "reference_repeated_window_fraction",
         "cipher_distinct_fraction", "reference_distinct_fraction"],
        [[r.m, r.metrics_a.max_prob, r.metrics_b.max_prob,
          r.metrics_a.repeated_window_fraction, r.metrics_b.repeated_window_fraction,
          r.metrics_a.distinct_fraction, r.metrics_b.distinct_fraction] for r in rows],
    )
    return dict(zip(CSV_FILES, (dev, ent, rec, conc)))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([[repr(x) if isinstance(x, float) else x for x in row] for row in rows])
    return buf.getvalue()


def write_report(report: ComparisonReport, out_dir, figures: bool = False) -> list:
    """Write ``report.json`` and the CSV exports (plus PNGs if asked)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.json"]
    written[0].write_text(json.dumps(report_to_dict(report), indent=2) + "\n")
    for name, (header, rows) in csv_tables(report).items():
        (out / name).write_text(_csv_text(header, rows))
        written.append(out / name)
    if figures:
        written.extend(render_figures(report, out))
    return written


def format_tables(report: ComparisonReport) -> str:
    """Three plain-text tables: concentration, deviation, entropy."""
    lines = []

    def table(title, header, rows):
        widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
        fmt = "  ".join(f"{{:<{w}}}" if i == 0 else f"{{:>{w}}}" for i, w in enumerate(widths))
        rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
        lines.extend([title, rule, fmt.format(*header), rule])
        lines.extend(fmt.format(*r) for r in rows)
        lines.extend([rule, ""])

    table(
        "Pattern concentration (repeated-window fraction / max pattern probability)",
        ["Pattern Length", "Cipher Output", "Random Output", "Cipher max p", "Random max p"],
        [[f"{r.m} bits", f"{r.metrics_a.repeated_window_fraction:.4f}",
          f"{r.metrics_b.repeated_window_fraction:.4f}",
          f"{r.metrics_a.max_prob:.3e}", f"{r.metrics_b.max_prob:.3e}"] for r in report.rows],
    )
    table(
        "Pattern Deviation Scores",
        ["Pattern Length", "Deviation Score", "Null mean", "Null std", "z"],
        [[f"{r.m} bits", f"{r.deviation:.4f}",
          f"{r.null.d_mean:.4f}" if r.null else "-",
          f"{r.null.d_std:.2e}" if r.null else "-",
          _fmt_z(r.z)] for r in report.rows],
    )
    table(
        "Pattern Entropy Comparison (bits, pooled; bound = min(m, log2 windows))",
        ["Pattern Length", "Cipher Output", "Random Output", "Bound", "Cipher per-seq", "Random per-seq"],
        [[f"{r.m} bits", f"{r.metrics_a.entropy_bits:.3f}", f"{r.metrics_b.entropy_bits:.3f}",
          f"{r.metrics_a.entropy_max_bits:.3f}",
          f"{r.seq_entropy_a[0]:.3f}", f"{r.seq_entropy_b[0]:.3f}"] for r in report.rows],
    )
    return "\n".join(lines)


def _fmt_z(z) -> str:
    if z is None:
        return "-"
    if math.isinf(z):
        return "+inf" if z > 0 else "-inf"
    return f"{z:+.2f}"


def render_figures(report: ComparisonReport, out_dir) -> list:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    out = Path(out_dir)
    ms = [r.m for r in report.rows]
    x = np.arange(len(ms))
    labels = [str(m) for m in ms]
    written = []

    def save(fig, name):
        path = out / name
        fig.tight_layout()
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(x - 0.2, [r.metrics_a.repeated_window_fraction for r in report.rows], 0.4, label="Cipher Output")
    ax.bar(x + 0.2, [r.metrics_b.repeated_window_fraction for r in report.rows], 0.4, label="Random")
    ax.set_xticks(x, labels)
    ax.set_xlabel("Pattern Length (bits)")
    ax.set_ylabel("Repeated-window fraction")
    ax.legend()
    ax.grid(True, axis="y", alpha=0.4)
    save(fig, "concentration.png")

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(ms, [r.deviation for r in report.rows], marker="*", color="purple", label="observed")
    nulls = [r.null for r in report.rows]
    if all(nulls):
        mean = np.array([n.d_mean for n in nulls])
        std = np.array([n.d_std for n in nulls])
        ax.fill_between(ms, mean - 4 * std, mean + 4 * std, color="grey", alpha=0.3, label="null ±4σ")
    ax.set_xlabel("Pattern Length (bits)")
    ax.set_ylabel("Deviation Score")
    ax.legend()
    ax.grid(True, alpha=0.4)
    save(fig, "deviation.png")

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(x - 0.2, [r.metrics_a.entropy_bits for r in report.rows], 0.4, label="Cipher Output")
    ax.bar(x + 0.2, [r.metrics_b.entropy_bits for r in report.rows], 0.4, label="Random")
    ax.plot(x, [r.metrics_a.entropy_max_bits for r in report.rows], "k_", markersize=30, label="bound")
    ax.set_xticks(x, labels)
    ax.set_xlabel("Pattern Length (bits)")
    ax.set_ylabel("Entropy (bits)")
    ax.legend(loc="upper left")
    ax.grid(True, axis="y", alpha=0.4)
    save(fig, "entropy.png")

    fig, axes = plt.subplots(1, len(ms), figsize=(3 * len(ms), 3), squeeze=False, sharey=True)
    bx = np.arange(len(RECURRENCE_BINS))
    for ax, r in zip(axes[0], report.rows):
        ax.bar(bx - 0.2, r.recurrence_a, 0.4, label="Cipher Output")
        ax.bar(bx + 0.2, r.recurrence_b, 0.4, label="Random")
        ax.set_xticks(bx, RECURRENCE_BINS)
        ax.set_title(f"m = {r.m}")
        ax.set_xlabel("Recurrence count")
    axes[0][0].set_ylabel("Fraction of distinct patterns")
    axes[0][0].legend()
    save(fig, "recurrence.png")
    return written
