"""Evaluation statistics: linear correlation, rank correlation, tolerance accuracy.

Rank correlation assigns average ranks to ties and then takes the Pearson
correlation of the ranks; on all-distinct inputs this coincides with the
classical 1 - 6*sum(d^2) / (n*(n^2-1)) closed form.  A prediction counts as
within tolerance when |pred - actual| <= tau (inclusive boundary).
All accumulation happens in float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateVector, LengthMismatch


def _as_f64(x, y) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    b = np.asarray(y, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise LengthMismatch(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def plcc(x, y) -> float:
    """Pearson linear correlation coefficient."""
    a, b = _as_f64(x, y)
    if a.size < 2:
        raise LengthMismatch("need at least 2 samples")
    a = a - a.mean()
    b = b - b.mean()
    # single square root of the product: one rounding step fewer than
    # sqrt(sx)*sqrt(sy), which keeps exact cases (e.g. rank vectors) exact
    denom = np.sqrt(np.sum(a * a) * np.sum(b * b))
    if denom == 0.0:
        raise DegenerateVector("constant input vector")
    return float(np.sum(a * b) / denom)


def rank_average_ties(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank range."""
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    order = np.argsort(a, kind="stable")
    ranks = np.empty(a.size, dtype=np.float64)
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def srcc(x, y) -> float:
    """Spearman rank-order correlation coefficient (average-rank ties)."""
    a, b = _as_f64(x, y)
    if a.size < 2:
        raise LengthMismatch("need at least 2 samples")
    return plcc(rank_average_ties(a), rank_average_ties(b))


def tolerance_accuracy(pred, actual, tau: float = 0.5) -> float:
    """Fraction of predictions with |pred - actual| <= tau."""
    if tau <= 0:
        raise ValueError("tau must be > 0")
    p, a = _as_f64(pred, actual)
    if p.size == 0:
        raise LengthMismatch("need at least 1 sample")
    return float(np.count_nonzero(np.abs(p - a) <= tau)) / p.size


def mse(pred, actual) -> float:
    p, a = _as_f64(pred, actual)
    if p.size == 0:
        raise LengthMismatch("need at least 1 sample")
    d = p - a
    return float(np.mean(d * d))


@dataclass
class EvalReport:
    plcc: float
    srcc: float
    tolerance_accuracy: float
    mse: float
    n: int
    per_image: list[tuple[str, float, float]]  # (path, actual_mos, predicted_mos)


def evaluate(predictions, actuals, paths, tau: float = 0.5) -> EvalReport:
    p, a = _as_f64(predictions, actuals)
    if len(paths) != p.size:
        raise LengthMismatch(f"paths length {len(paths)} vs {p.size} predictions")
    return EvalReport(
        plcc=plcc(p, a),
        srcc=srcc(p, a),
        tolerance_accuracy=tolerance_accuracy(p, a, tau),
        mse=mse(p, a),
        n=int(p.size),
        per_image=[(str(path), float(av), float(pv)) for path, av, pv in zip(paths, a, p)],
    )


def report_to_json(report: EvalReport) -> str:
    payload = {
        "plcc": report.plcc,
        "srcc": report.srcc,
        "tolerance_accuracy": report.tolerance_accuracy,
        "mse": report.mse,
        "n": report.n,
        "per_image": [
            {"path": p, "actual_mos": a, "predicted_mos": pr} for p, a, pr in report.per_image
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def write_report(report: EvalReport, out_dir) -> None:
    """Write report.json plus summary.csv and per_image.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_to_json(report), encoding="utf-8")
    summary = "plcc,srcc,tolerance_accuracy,mse,n\n" + (
        f"{report.plcc!r},{report.srcc!r},{report.tolerance_accuracy!r},{report.mse!r},{report.n}\n"
    )
    (out / "summary.csv").write_text(summary, encoding="utf-8")
    rows = ["path,actual_mos,predicted_mos"]
    rows += [f"{p},{a!r},{pr!r}" for p, a, pr in report.per_image]
    (out / "per_image.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
