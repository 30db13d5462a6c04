"""Dataset-manifest evaluation: per-label precision/recall, mean accuracy,
error taxonomy, keypoint-count extremes, rotation-robustness sweep and
per-image runtime."""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .config import Config
from .errors import ManifestError
from .image import GrayImage, Rect, load_pgm, rotate
from .recognize import LABELS, UNRECOGNIZED, run_scenario

ERROR_CATEGORIES = ("mustache", "beard_mustache", "wrinkles", "low_quality", "none")

MANIFEST_HEADER = ["path", "label", "x", "y", "w", "h", "category"]


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    label: str
    roi: Rect | None = None
    category: str = "none"


@dataclass
class EvalReport:
    scenario: int
    n_images: int = 0
    n_failed: int = 0
    precision: dict = field(default_factory=dict)
    recall: dict = field(default_factory=dict)
    accuracy: float = 0.0
    error_rate_by_total: dict = field(default_factory=dict)
    error_rate_by_category: dict = field(default_factory=dict)
    keypoints_min: int = 0
    keypoints_max: int = 0
    rotation_min: float | None = None
    rotation_mean: float | None = None
    rotation_max: float | None = None
    seconds_per_image: float = 0.0


def load_manifest(path: str) -> list[ManifestEntry]:
    """Parse the `path,label,x,y,w,h,category` CSV; relative image paths are
    resolved against the manifest's directory."""
    base = os.path.dirname(os.path.abspath(path))
    entries: list[ManifestEntry] = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise ManifestError("empty manifest") from exc
        if [h.strip() for h in header] != MANIFEST_HEADER:
            raise ManifestError(f"line 1: expected header {','.join(MANIFEST_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise ManifestError(f"line {lineno}: expected {len(MANIFEST_HEADER)} fields")
            raw_path, label, x, y, w, h, category = (cell.strip() for cell in row)
            if label not in LABELS:
                raise ManifestError(f"line {lineno}: unknown label {label!r}")
            roi_fields = [x, y, w, h]
            if any(roi_fields) and not all(roi_fields):
                raise ManifestError(f"line {lineno}: partial ROI {roi_fields}")
            roi = None
            if all(roi_fields):
                try:
                    roi = Rect(int(x), int(y), int(w), int(h))
                except ValueError as exc:
                    raise ManifestError(f"line {lineno}: non-integer ROI") from exc
            category = category or "none"
            if category not in ERROR_CATEGORIES:
                raise ManifestError(f"line {lineno}: unknown category {category!r}")
            image_path = raw_path if os.path.isabs(raw_path) else os.path.join(base, raw_path)
            entries.append(ManifestEntry(image_path, label, roi, category))
    return entries


def _load_entry_image(entry: ManifestEntry) -> GrayImage:
    with open(entry.image_path, "rb") as fh:
        return load_pgm(fh.read())


def _run_entry(entry: ManifestEntry, scenario: int, config: Config) -> tuple[str, dict, float]:
    img = _load_entry_image(entry)
    start = time.monotonic()
    result = run_scenario(img, scenario, config, roi=entry.roi)
    elapsed = time.monotonic() - start
    return result.label, result.diagnostics, elapsed


def confusion_metrics(pairs: list[tuple[str, str]]) -> tuple[dict, dict, float]:
    """precision/recall per label and overall accuracy from (truth,
    predicted) pairs; `unrecognized` counts as a false negative for its
    true label and against nothing else."""
    precision: dict = {}
    recall: dict = {}
    correct = sum(1 for truth, pred in pairs if truth == pred)
    for label in LABELS:
        tp = sum(1 for truth, pred in pairs if truth == label and pred == label)
        fp = sum(1 for truth, pred in pairs if truth != label and pred == label)
        fn = sum(1 for truth, pred in pairs if truth == label and pred != label)
        precision[label] = tp / (tp + fp) if tp + fp else 0.0
        recall[label] = tp / (tp + fn) if tp + fn else 0.0
    accuracy = correct / len(pairs) if pairs else 0.0
    return precision, recall, accuracy


def _scenario_point_count(diag: dict) -> int:
    for key in ("n_brisk", "n_reduced", "n_points", "n_harris"):
        if key in diag:
            return int(diag[key])
    return 0


def evaluate(entries: list[ManifestEntry], scenario: int, config: Config | None = None) -> EvalReport:
    """Run the scenario over every manifest entry and assemble the report.

    Images are processed by a bounded worker pool; results reduce in
    manifest order so the metrics are deterministic. The first image runs
    once more as an untimed warm-up.
    """
    config = config or Config()
    report = EvalReport(scenario=scenario, n_images=len(entries))
    if not entries:
        return report

    try:
        _run_entry(entries[0], scenario, config)  # warm-up, excluded from timing
    except Exception:
        pass

    workers = max(1, int(config.get("eval.workers")))
    outcomes: list[tuple[str, dict, float] | None] = [None] * len(entries)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(_run_entry, e, scenario, config): i for i, e in enumerate(entries)}
        for future, index in futures.items():
            try:
                outcomes[index] = future.result()
            except Exception:
                outcomes[index] = None

    pairs: list[tuple[str, str]] = []
    counts: list[int] = []
    times: list[float] = []
    wrong_by_cat = {c: 0 for c in ERROR_CATEGORIES}
    total_by_cat = {c: 0 for c in ERROR_CATEGORIES}
    for entry, outcome in zip(entries, outcomes):
        total_by_cat[entry.category] += 1
        if outcome is None:
            report.n_failed += 1
            pairs.append((entry.label, UNRECOGNIZED))
            wrong_by_cat[entry.category] += 1
            continue
        predicted, diag, elapsed = outcome
        pairs.append((entry.label, predicted))
        counts.append(_scenario_point_count(diag))
        times.append(elapsed)
        if predicted != entry.label:
            wrong_by_cat[entry.category] += 1

    report.precision, report.recall, report.accuracy = confusion_metrics(pairs)
    report.keypoints_min = min(counts) if counts else 0
    report.keypoints_max = max(counts) if counts else 0
    report.seconds_per_image = sum(times) / len(times) if times else 0.0
    total = len(entries)
    for cat in ERROR_CATEGORIES:
        report.error_rate_by_total[cat] = wrong_by_cat[cat] / total if total else 0.0
        report.error_rate_by_category[cat] = (
            wrong_by_cat[cat] / total_by_cat[cat] if total_by_cat[cat] else 0.0
        )
    return report


@dataclass
class RotationTolerance:
    index: int
    baseline_correct: bool
    negative_deg: float = 0.0
    positive_deg: float = 0.0


def rotation_sweep(
    entries: list[ManifestEntry],
    scenario: int,
    config: Config | None = None,
    step: float | None = None,
    max_deg: float | None = None,
) -> list[RotationTolerance]:
    """Per image: grow |angle| in each direction until the prediction first
    differs from the 0-degree prediction; record the last agreeing angle.

    Images misclassified at 0 degrees are reported with
    baseline_correct=False and skipped.
    """
    config = config or Config()
    step = float(config.get("eval.rotation_step")) if step is None else float(step)
    max_deg = float(config.get("eval.rotation_max")) if max_deg is None else float(max_deg)
    results: list[RotationTolerance] = []
    for index, entry in enumerate(entries):
        img = _load_entry_image(entry)
        baseline = run_scenario(img, scenario, config, roi=entry.roi).label
        if baseline != entry.label:
            results.append(RotationTolerance(index=index, baseline_correct=False))
            continue
        tolerance = RotationTolerance(index=index, baseline_correct=True)
        for direction in (-1.0, 1.0):
            last_ok = 0.0
            angle = step
            while angle <= max_deg + 1e-9:
                turned = rotate(img, direction * angle)
                label = run_scenario(turned, scenario, config, roi=entry.roi).label
                if label != baseline:
                    break
                last_ok = angle
                angle += step
            if direction < 0:
                tolerance.negative_deg = last_ok
            else:
                tolerance.positive_deg = last_ok
        results.append(tolerance)
    return results


def summarize_rotation(results: list[RotationTolerance]) -> tuple[float, float, float] | None:
    """(min, mean, max) over per-image tolerances (both directions pooled)."""
    swept = [r for r in results if r.baseline_correct]
    if not swept:
        return None
    values = [r.negative_deg for r in swept] + [r.positive_deg for r in swept]
    return (min(values), sum(values) / len(values), max(values))


_REPORT_FIELDS: tuple[tuple[str, str], ...] = (
    ("scenario", "int"),
    ("n_images", "int"),
    ("n_failed", "int"),
    ("accuracy", "float"),
    ("keypoints_min", "int"),
    ("keypoints_max", "int"),
    ("rotation_min", "optfloat"),
    ("rotation_mean", "optfloat"),
    ("rotation_max", "optfloat"),
    ("seconds_per_image", "float"),
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def emit_report(report: EvalReport, fmt: str = "csv") -> str:
    """Serialize a report; CSV is `metric,value` rows that round-trip
    through parse_report at 6 significant digits."""
    rows: list[tuple[str, object]] = []
    for label in LABELS:
        rows.append((f"precision.{label}", report.precision.get(label, 0.0)))
        rows.append((f"recall.{label}", report.recall.get(label, 0.0)))
    for name, _ in _REPORT_FIELDS:
        rows.append((name, getattr(report, name)))
    for cat in ERROR_CATEGORIES:
        rows.append((f"error_rate_by_total.{cat}", report.error_rate_by_total.get(cat, 0.0)))
        rows.append((f"error_rate_by_category.{cat}", report.error_rate_by_category.get(cat, 0.0)))

    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for name, value in rows:
            writer.writerow([name, _fmt(value)])
        return out.getvalue()
    if fmt == "markdown":
        lines = ["| label | precision | recall |", "| --- | --- | --- |"]
        for label in LABELS:
            lines.append(
                f"| {label} | {_fmt(report.precision.get(label, 0.0))} "
                f"| {_fmt(report.recall.get(label, 0.0))} |"
            )
        lines.append("")
        lines.append("| metric | value |")
        lines.append("| --- | --- |")
        for name, value in rows[2 * len(LABELS):]:
            lines.append(f"| {name} | {_fmt(value)} |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> EvalReport:
    """Inverse of emit_report(..., 'csv')."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != ["metric", "value"]:
        raise ManifestError("not a report CSV")
    values = {row[0]: row[1] for row in reader if row}
    report = EvalReport(scenario=int(values.get("scenario", "0") or 0))
    for name, kind in _REPORT_FIELDS:
        raw = values.get(name, "")
        if kind == "int":
            setattr(report, name, int(raw or 0))
        elif kind == "float":
            setattr(report, name, float(raw or 0.0))
        else:
            setattr(report, name, float(raw) if raw else None)
    for label in LABELS:
        report.precision[label] = float(values.get(f"precision.{label}", 0.0) or 0.0)
        report.recall[label] = float(values.get(f"recall.{label}", 0.0) or 0.0)
    for cat in ERROR_CATEGORIES:
        report.error_rate_by_total[cat] = float(values.get(f"error_rate_by_total.{cat}", 0.0) or 0.0)
        report.error_rate_by_category[cat] = float(
            values.get(f"error_rate_by_category.{cat}", 0.0) or 0.0
        )
    return report
