"""CSV tables and SVG charts for an :class:`~sign_kinematics.metrics.EvaluationReport`.

Output is byte-deterministic: floats are written with ``repr`` and SVGs are saved
with a fixed hash salt and no date metadata.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import EvaluationReport, FrameLengthStats, GroupReport  # noqa: E402
from .skeleton import GROUP_NAMES  # noqa: E402

# Okabe-Ito colorblind-safe palette
COLORS = {
    "neck": "#000000",
    "shoulder": "#E69F00",
    "upper_arm": "#56B4E9",
    "lower_arm": "#009E73",
    "palm": "#0072B2",
    "finger": "#D55E00",
    "overall": "#CC79A7",
}
PRED_COLOR = "#D55E00"
REF_COLOR = "#0072B2"

LABELS = {
    "neck": "Neck",
    "shoulder": "Shoulder",
    "upper_arm": "Upper arm",
    "lower_arm": "Lower arm",
    "palm": "Palm",
    "finger": "Finger",
    "overall": "Overall",
}

TITLES = {
    "bone_length": "Bone length deviation (%)",
    "variance_global": "Movement variance deviation, global (%)",
    "variance_local": "Movement variance deviation, local (%)",
    "velocity_global": "Movement velocity deviation, global (%)",
    "velocity_local": "Movement velocity deviation, local (%)",
}

GROUP_COLUMNS = ["label", "kind", "deviation_pct", "members", "excluded"]
FRAME_COLUMNS = [
    "label",
    "lower",
    "upper",
    "pred_count",
    "ref_count",
    "mean_signed_pct",
    "mean_abs_pct",
    "mean_pred_frames",
    "mean_ref_frames",
]

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 7,
    "svg.hashsalt": "sign-kinematics",
    "svg.fonttype": "path",
}


def _fmt(x: float) -> str:
    return repr(float(x))


def group_rows(report: GroupReport) -> list[list[str]]:
    rows = []
    for group, value in report.groups.items():
        members = report.members[group]
        excluded = report.group_excluded.get(group, 0)
        rows.append([group, "group", _fmt(value), str(members), str(excluded)])
    if report.groups:
        rows.append(
            [
                "overall",
                "overall",
                _fmt(report.overall),
                str(sum(report.members.values())),
                str(report.excluded_total),
            ]
        )
    for name, value in report.per_joint.items():
        rows.append([name, "joint", _fmt(value), "1", str(report.excluded.get(name, 0))])
    return rows


def frame_rows(stats: FrameLengthStats) -> list[list[str]]:
    if stats.bin_edges.size == 0:
        return []
    edges = stats.bin_edges
    rows = [
        [
            "all",
            _fmt(edges[0]),
            _fmt(edges[-1]),
            str(int(stats.pred_counts.sum())),
            str(int(stats.ref_counts.sum())),
            _fmt(stats.mean_signed_rel_diff),
            _fmt(stats.mean_abs_rel_diff),
            _fmt(stats.mean_pred_length),
            _fmt(stats.mean_ref_length),
        ]
    ]
    for i, (pc, rc) in enumerate(zip(stats.pred_counts, stats.ref_counts, strict=True)):
        rows.append(
            [f"bin_{i:02d}", _fmt(edges[i]), _fmt(edges[i + 1]), str(int(pc)), str(int(rc))]
            + [""] * 4
        )
    return rows


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _save_svg(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_group_bars(report: GroupReport, title: str, path: Path) -> None:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 2.6))
        labels = [g for g in GROUP_NAMES if g in report.groups]
        if labels:
            labels.append("overall")
            values = [report.groups[g] for g in labels[:-1]] + [report.overall]
            ax.bar(
                range(len(labels)),
                values,
                color=[COLORS[g] for g in labels],
                edgecolor="none",
            )
            ax.set_xticks(range(len(labels)))
            ax.set_xticklabels([LABELS[g] for g in labels], rotation=30, ha="right")
        ax.set_title(title)
        ax.set_ylabel("Deviation (%)")
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
        fig.tight_layout()
        _save_svg(fig, path)


def plot_frame_histogram(stats: FrameLengthStats, path: Path) -> None:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 2.6))
        if stats.bin_edges.size:
            edges = stats.bin_edges
            ax.stairs(stats.ref_counts, edges, color=REF_COLOR, label="Reference")
            ax.stairs(stats.pred_counts, edges, color=PRED_COLOR, label="Prediction")
            ax.axvline(stats.mean_ref_length, color=REF_COLOR, linestyle=":", linewidth=0.8)
            ax.axvline(stats.mean_pred_length, color=PRED_COLOR, linestyle=":", linewidth=0.8)
            ax.legend(loc="upper right")
        ax.set_title("Frame length distribution")
        ax.set_xlabel("Frames per sequence")
        ax.set_ylabel("Sequences")
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
        fig.tight_layout()
        _save_svg(fig, path)


def emit_report(report: EvaluationReport, out_dir: Path | str) -> list[Path]:
    """Write six CSVs and six SVG charts; returns the written paths in a fixed order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in TITLES:
        group_report = getattr(report, name)
        csv_path = out_dir / f"{name}.csv"
        svg_path = out_dir / f"{name}.svg"
        _write_csv(csv_path, GROUP_COLUMNS, group_rows(group_report))
        plot_group_bars(group_report, TITLES[name], svg_path)
        written += [csv_path, svg_path]
    csv_path = out_dir / "frame_length.csv"
    svg_path = out_dir / "frame_length.svg"
    _write_csv(csv_path, FRAME_COLUMNS, frame_rows(report.frame_length))
    plot_frame_histogram(report.frame_length, svg_path)
    return written + [csv_path, svg_path]
