"""Report artifacts: JSON, plain-text table, CDF CSVs, and figures.

Everything is rendered into memory first and written in one pass at the
end, so a failure partway through never leaves a half-written report
directory. The JSON and CSV artifacts are byte-deterministic for a given
analysis result; figures are rendered from the same numbers but carry no
determinism guarantee (PNG encoding is the plotting library's business).
"""

from __future__ import annotations

import csv
import io
import os

from .analysis import CohortResult, cohort_report, report_json_bytes

REPORT_JSON = "report.json"
REPORT_TXT = "report.txt"
VANTAGE_CSV = "vantage_stats.csv"

VANTAGE_COLUMNS = [
    "vantage_id",
    "tier",
    "window_count",
    "prevalence",
    "median_wifi_mbps",
    "median_access_mbps",
    "effective_throughput_mbps",
    "gap_mbps",
    "diff_sample_error_mbps",
    "prevalence_class",
]

# Tier labels contain < and >, which make poor filenames.
_TIER_SLUGS = {
    "<50": "lt50",
    "50-100": "50-100",
    "100-200": "100-200",
    "200-400": "200-400",
    "400-800": "400-800",
    ">800": "gt800",
}


def tier_slug(tier: str) -> str:
    return _TIER_SLUGS[tier]


def _num(value: float) -> str:
    return repr(float(value))


def _csv_bytes(rows: list[list], header: list[str]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue().encode("utf-8")


def _cdf_csv(points: list[list[float]]) -> bytes:
    return _csv_bytes(
        [[_num(v), _num(f)] for v, f in points], ["value", "cumulative_fraction"]
    )


def _vantage_csv(report: dict) -> bytes:
    rows = []
    for s in report["vantage_stats"]:
        rows.append(
            [
                s["vantage_id"],
                s["tier"],
                s["window_count"],
                _num(s["prevalence"]),
                _num(s["median_wifi_mbps"]),
                _num(s["median_access_mbps"]),
                _num(s["effective_throughput_mbps"]),
                _num(s["gap_mbps"]),
                _num(s["diff_sample_error_mbps"]),
                s["prevalence_class"],
            ]
        )
    return _csv_bytes(rows, VANTAGE_COLUMNS)


def _text_table(report: dict) -> str:
    lines = []
    lines.append("Cohort bottleneck analysis")
    lines.append("=" * 60)
    lines.append(f"samples analyzed        : {report['sample_count']}")
    lines.append(f"households              : {report['household_count']}")
    lines.append(f"vantage points retained : {report['vantage_point_count']}")
    lines.append(f"coincident windows      : {report['window_count_total']}")
    frac = report["at_least_one_bottleneck_fraction"]
    lines.append(f"with >=1 bottleneck     : {frac:.1%}")
    classes = report["class_counts"]
    lines.append(
        "prevalence classes      : "
        f"rare {classes['rare']}, mixed {classes['mixed']}, frequent {classes['frequent']}"
    )
    for name in ("frequent", "rare"):
        value = report[f"median_access_{name}_mbps"]
        if value is not None:
            lines.append(f"median access ({name:8s}): {value:.2f} Mbps")
    lines.append("")
    lines.append(
        f"{'Tier (Mbps)':<12} {'Vantage':>8} {'Mean access':>12} "
        f"{'Mean actual':>12} {'Mean gap':>10}"
    )
    lines.append("-" * 60)
    for t in report["tier_summaries"]:
        lines.append(
            f"{t['tier']:<12} {t['vantage_count']:>8} {t['mean_access_mbps']:>12.2f} "
            f"{t['mean_effective_mbps']:>12.2f} {t['mean_gap_mbps']:>10.2f}"
        )
    lines.append("")
    lines.append("Mean actual = mean of per-vantage min(median wifi, median access).")
    lines.append("Medians and means are both reported in report.json, labeled.")
    return "\n".join(lines) + "\n"


def _render_figures(report: dict) -> dict[str, bytes]:
    """Render PNGs into memory; returns filename -> bytes."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    figures: dict[str, bytes] = {}

    def grab(fig, name: str) -> None:
        buffer = io.BytesIO()
        fig.savefig(buffer, format="png", dpi=120, bbox_inches="tight")
        plt.close(fig)
        figures[name] = buffer.getvalue()

    # Prevalence CDFs: overall plus one curve per tier.
    fig, ax = plt.subplots(figsize=(7, 4.5))
    overall = report["prevalence_cdf_overall"]
    ax.step(
        [p[0] for p in overall],
        [p[1] for p in overall],
        where="post",
        color="black",
        linewidth=2,
        label="all vantage points",
    )
    for tier, points in report["prevalence_cdf_by_tier"].items():
        ax.step(
            [p[0] for p in points],
            [p[1] for p in points],
            where="post",
            alpha=0.7,
            label=f"{tier} Mbps",
        )
    ax.set_xlabel("Bottleneck prevalence")
    ax.set_ylabel("Cumulative fraction of vantage points")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    grab(fig, "fig_prevalence_cdf.png")

    # Mean access vs mean actual throughput per tier.
    tiers = report["tier_summaries"]
    labels = [t["tier"] for t in tiers]
    x = range(len(tiers))
    width = 0.38
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.bar(
        [i - width / 2 for i in x],
        [t["mean_access_mbps"] for t in tiers],
        width,
        label="mean access",
    )
    ax.bar(
        [i + width / 2 for i in x],
        [t["mean_effective_mbps"] for t in tiers],
        width,
        label="mean actual",
    )
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_xlabel("Access speed tier (Mbps)")
    ax.set_ylabel("Throughput (Mbps)")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    grab(fig, "fig_tier_throughput.png")

    return figures


def render_report_files(result: CohortResult, *, figures: bool = True) -> dict[str, bytes]:
    """Build every artifact in memory: filename -> content."""
    report = cohort_report(result)
    files: dict[str, bytes] = {
        REPORT_JSON: report_json_bytes(report),
        REPORT_TXT: _text_table(report).encode("utf-8"),
        VANTAGE_CSV: _vantage_csv(report),
        "cdf_overall.csv": _cdf_csv(report["prevalence_cdf_overall"]),
    }
    for tier, points in report["prevalence_cdf_by_tier"].items():
        files[f"cdf_tier_{tier_slug(tier)}.csv"] = _cdf_csv(points)
    if figures:
        files.update(_render_figures(report))
    return files


def write_report_files(
    result: CohortResult, out_dir: str | os.PathLike, *, figures: bool = True
) -> list[str]:
    """Render and write all artifacts; returns the written paths, sorted."""
    files = render_report_files(result, figures=figures)
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name in sorted(files):
        target = os.path.join(os.fspath(out_dir), name)
        with open(target, "wb") as fh:
            fh.write(files[name])
        paths.append(target)
    return paths
