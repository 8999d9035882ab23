"""Monte Carlo risk evaluation.

Simulates estimator risks over gap grids with reproducible substreams,
emits curves as CSV (and minimal SVG plots), and formalizes dominance
comparisons between a base estimator and its clipped version.

Reproducibility contract: each (gap index, estimator batch) gets its own
substream derived from (seed, gap index[, estimator index]) through a
``SeedSequence``, so grid points can be evaluated in any order or in
parallel without changing results. With common random numbers switched on,
every estimator at a given gap sees identical draws, which sharpens
risk-difference comparisons. All stored numbers are rounded to 12
significant digits, the same precision the CSV format carries, so writing
and re-parsing a curve is lossless and rewriting is byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, IncompatibleEstimatorsError, SimulationOverflowError
from .estimators import EquivariantEstimator
from .families import SMALLER, BivariateModel, Theta, make_model
from .losses import LOCATION, LossSpec

CSV_HEADER = ("model", "target", "loss", "estimator", "lambda", "risk", "stderr", "n", "seed")


def _round12(x: float) -> float:
    return float(f"{float(x):.12g}")


def _fmt12(x: float) -> str:
    return f"{float(x):.12g}"


def derive_substream_seed(seed: int, gap_index: int, estimator_index: Optional[int] = None) -> int:
    """Deterministic substream entropy for one grid cell.

    With common random numbers the estimator index is omitted so that all
    estimators at a gap share the stream.
    """
    key = (int(seed), int(gap_index)) if estimator_index is None else (
        int(seed), int(gap_index), int(estimator_index)
    )
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])


@dataclasses.dataclass(frozen=True)
class RiskEstimate:
    """Simulated mean risk with its Monte Carlo standard error."""

    mean_risk: float
    std_error: float
    n: int
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("replicate count must be at least 1")
        if self.std_error < 0.0:
            raise DomainError("standard error cannot be negative")


@dataclasses.dataclass(frozen=True)
class RiskCurve:
    """Risk table over a gap grid for a set of estimators.

    Risk depends on the parameter pair only through the gap, so curves fix
    the first component at the mode's identity (0 for location, 1 for
    scale) and move the second; ``base_theta`` records that convention.
    ``loss_cov`` (excluded from equality, absent after CSV parsing) holds
    the per-gap covariance matrix of loss values across estimators when
    common random numbers were used.
    """

    model_name: str
    model_hyper: tuple
    loss_name: str
    mode: str
    target: str
    estimator_labels: tuple
    lambda_grid: tuple
    estimates: tuple  # estimates[est_index][gap_index] -> RiskEstimate
    base_theta: float
    loss_cov: Optional[np.ndarray] = dataclasses.field(default=None, compare=False, repr=False)
    common_random_numbers: Optional[bool] = dataclasses.field(default=None, compare=False)

    def estimate(self, label: str, gap_index: int) -> RiskEstimate:
        return self.estimates[self.estimator_labels.index(label)][gap_index]

    def risks(self, label: str) -> np.ndarray:
        row = self.estimates[self.estimator_labels.index(label)]
        return np.array([e.mean_risk for e in row])

    def std_errors(self, label: str) -> np.ndarray:
        row = self.estimates[self.estimator_labels.index(label)]
        return np.array([e.std_error for e in row])


def _loss_arguments(mode: str, estimates: np.ndarray, theta_i: float) -> np.ndarray:
    if mode == LOCATION:
        return estimates - theta_i
    return estimates / theta_i


def _loss_values(loss: LossSpec, est: EquivariantEstimator, x1, x2, theta: Theta) -> np.ndarray:
    theta_i = theta.theta1 if est.target == SMALLER else theta.theta2
    values = est.evaluate(x1, x2)
    with np.errstate(over="ignore"):
        out = loss.value(_loss_arguments(est.mode, np.asarray(values), theta_i))
    bad = ~np.isfinite(out)
    if np.any(bad):
        raise SimulationOverflowError(int(np.argmax(bad)), f"estimator {est.label!r}")
    return out


def simulate_risk(
    model: BivariateModel,
    loss: LossSpec,
    est: EquivariantEstimator,
    theta: Theta,
    n: int,
    seed: int,
) -> RiskEstimate:
    """Mean and standard error of the loss over ``n`` independent draws."""
    if est.mode != model.mode or loss.kind != model.mode:
        raise IncompatibleEstimatorsError(
            "model, loss, and estimator must agree on location/scale mode"
        )
    draws = model.sample(theta, n, np.random.default_rng(int(seed)))
    values = _loss_values(loss, est, draws[:, 0], draws[:, 1], theta)
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return RiskEstimate(mean_risk=_round12(mean), std_error=_round12(se), n=int(n), seed=int(seed))


def _gap_theta(mode: str, gap: float) -> Theta:
    if mode == LOCATION:
        if gap < 0.0:
            raise DomainError("location gaps must satisfy lam >= 0")
        return Theta(0.0, gap)
    if gap < 1.0:
        raise DomainError("scale gaps must satisfy lam >= 1")
    return Theta(1.0, gap)


def risk_curve(
    model: BivariateModel,
    loss: LossSpec,
    estimators: Sequence[EquivariantEstimator],
    lambda_grid: Sequence[float],
    n: int,
    seed: int,
    common_random_numbers: bool = True,
) -> RiskCurve:
    """Simulated risks for every (estimator, gap) pair."""
    if not estimators:
        raise DomainError("need at least one estimator")
    target = estimators[0].target
    for est in estimators:
        if est.mode != model.mode or est.target != target:
            raise IncompatibleEstimatorsError("estimators must share the model's mode and one target")
    if loss.kind != model.mode:
        raise IncompatibleEstimatorsError("loss kind must match the model's mode")

    grid = [float(g) for g in lambda_grid]
    n_est = len(estimators)
    rows = [[None] * len(grid) for _ in range(n_est)]
    covs = np.zeros((len(grid), n_est, n_est)) if common_random_numbers else None

    for gi, gap in enumerate(grid):
        theta = _gap_theta(model.mode, gap)
        if common_random_numbers:
            sub = derive_substream_seed(seed, gi)
            draws = model.sample(theta, n, np.random.default_rng(sub))
            all_values = []
            for est in estimators:
                values = _loss_values(loss, est, draws[:, 0], draws[:, 1], theta)
                all_values.append(values)
            for ei, values in enumerate(all_values):
                mean = float(np.mean(values))
                se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
                rows[ei][gi] = RiskEstimate(_round12(mean), _round12(se), int(n), sub)
            if n > 1:
                covs[gi] = np.cov(np.vstack(all_values), ddof=1)
        else:
            for ei, est in enumerate(estimators):
                sub = derive_substream_seed(seed, gi, ei)
                rows[ei][gi] = simulate_risk(model, loss, est, theta, n, sub)

    return RiskCurve(
        model_name=model.name,
        model_hyper=tuple(sorted(model.hyper.items())),
        loss_name=loss.name,
        mode=model.mode,
        target=target,
        estimator_labels=tuple(e.label for e in estimators),
        lambda_grid=tuple(_round12(g) for g in grid),
        estimates=tuple(tuple(r) for r in rows),
        base_theta=0.0 if model.mode == LOCATION else 1.0,
        loss_cov=covs,
        common_random_numbers=bool(common_random_numbers),
    )


# ---------------------------------------------------------------------------
#  Dominance reporting
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class DominanceReport:
    """Per-gap risk difference between an improved estimator and its base.

    ``diff`` is improved minus base risk (negative is good);
    ``diff_se`` exploits the stored loss covariance when the curve was run
    with common random numbers, otherwise falls back to the conservative
    combined standard error. ``violation_gaps`` lists gaps where the
    improved risk exceeds the base by more than two standard errors;
    ``crossing_gaps`` lists consecutive-gap midpoints where the sign of the
    difference flips.
    """

    base_label: str
    improved_label: str
    lambda_grid: tuple
    diff: tuple
    diff_se: tuple
    violation_gaps: tuple
    max_improvement_gap: float
    max_improvement: float
    crossing_gaps: tuple

    @property
    def violations(self) -> int:
        return len(self.violation_gaps)


def dominance_report(curve: RiskCurve, base_label: str, improved_label: str) -> DominanceReport:
    """Formalize the figure-reading: does ``improved`` dominate ``base``?"""
    for label in (base_label, improved_label):
        if label not in curve.estimator_labels:
            raise DomainError(f"estimator {label!r} not present in the curve")
    bi = curve.estimator_labels.index(base_label)
    ii = curve.estimator_labels.index(improved_label)

    rb, ri = curve.risks(base_label), curve.risks(improved_label)
    sb, si = curve.std_errors(base_label), curve.std_errors(improved_label)
    diff = ri - rb
    if curve.loss_cov is not None:
        n = curve.estimates[0][0].n
        var = (
            curve.loss_cov[:, bi, bi]
            + curve.loss_cov[:, ii, ii]
            - 2.0 * curve.loss_cov[:, bi, ii]
        ) / n
        se = np.sqrt(np.clip(var, 0.0, None))
    else:
        se = np.sqrt(sb**2 + si**2)

    grid = np.asarray(curve.lambda_grid)
    violating = diff > 2.0 * se
    sign = np.sign(diff)
    cross = [
        _round12(0.5 * (grid[i] + grid[i + 1]))
        for i in range(len(grid) - 1)
        if sign[i] != 0 and sign[i + 1] != 0 and sign[i] != sign[i + 1]
    ]
    best = int(np.argmin(diff))
    return DominanceReport(
        base_label=base_label,
        improved_label=improved_label,
        lambda_grid=curve.lambda_grid,
        diff=tuple(_round12(d) for d in diff),
        diff_se=tuple(_round12(s) for s in se),
        violation_gaps=tuple(float(g) for g in grid[violating]),
        max_improvement_gap=float(grid[best]),
        max_improvement=_round12(diff[best]),
        crossing_gaps=tuple(cross),
    )


# ---------------------------------------------------------------------------
#  CSV serialization
# ---------------------------------------------------------------------------


def _model_id(curve: RiskCurve) -> str:
    if not curve.model_hyper:
        return curve.model_name
    inner = ";".join(f"{k}={_fmt12(v)}" for k, v in curve.model_hyper)
    return f"{curve.model_name}({inner})"


def _parse_model_id(text: str):
    if "(" not in text:
        return text, ()
    name, _, rest = text.partition("(")
    rest = rest.rstrip(")")
    hyper = []
    for item in rest.split(";"):
        key, _, value = item.partition("=")
        hyper.append((key, float(value)))
    return name, tuple(hyper)


def write_risk_csv(curve: RiskCurve, path) -> None:
    """Write the curve with fixed 12-significant-digit formatting."""
    model_id = _model_id(curve)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for ei, label in enumerate(curve.estimator_labels):
            for gi, gap in enumerate(curve.lambda_grid):
                est = curve.estimates[ei][gi]
                writer.writerow(
                    (
                        model_id,
                        curve.target,
                        curve.loss_name,
                        label,
                        _fmt12(gap),
                        _fmt12(est.mean_risk),
                        _fmt12(est.std_error),
                        str(est.n),
                        str(est.seed),
                    )
                )


def read_risk_csv(path) -> RiskCurve:
    """Parse a curve written by :func:`write_risk_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise DomainError(f"unexpected CSV header {header!r}")
        rows = list(reader)
    if not rows:
        raise DomainError("empty risk CSV")

    model_name, model_hyper = _parse_model_id(rows[0][0])
    mode = make_model(model_name, **dict(model_hyper)).mode
    target, loss_name = rows[0][1], rows[0][2]
    labels, grid = [], []
    for row in rows:
        if row[3] not in labels:
            labels.append(row[3])
    for row in rows:
        if row[3] == labels[0]:
            grid.append(float(row[4]))
    table = {}
    for row in rows:
        table[(row[3], float(row[4]))] = RiskEstimate(
            mean_risk=float(row[5]), std_error=float(row[6]), n=int(row[7]), seed=int(row[8])
        )
    estimates = tuple(
        tuple(table[(label, gap)] for gap in grid) for label in labels
    )
    return RiskCurve(
        model_name=model_name,
        model_hyper=model_hyper,
        loss_name=loss_name,
        mode=mode,
        target=target,
        estimator_labels=tuple(labels),
        lambda_grid=tuple(grid),
        estimates=estimates,
        base_theta=0.0 if mode == LOCATION else 1.0,
    )


# ---------------------------------------------------------------------------
#  Minimal SVG plots
# ---------------------------------------------------------------------------

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def write_risk_svg(curve: RiskCurve, path, width=640, height=480) -> None:
    """One polyline per estimator, risk against the gap. No dependencies."""
    margin = 56.0
    xs = np.asarray(curve.lambda_grid, dtype=float)
    all_risks = np.vstack([curve.risks(label) for label in curve.estimator_labels])
    y_lo, y_hi = float(all_risks.min()), float(all_risks.max())
    if y_hi - y_lo < 1e-12:
        y_hi = y_lo + 1.0
    x_lo, x_hi = float(xs.min()), float(xs.max())
    if x_hi - x_lo < 1e-12:
        x_hi = x_lo + 1.0

    def sx(x):
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        parts.append(
            f'<line x1="{sx(xv):.2f}" y1="{height - margin}" x2="{sx(xv):.2f}" '
            f'y2="{height - margin + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{sx(xv):.2f}" y="{height - margin + 18}" font-size="11" '
            f'text-anchor="middle">{xv:.3g}</text>'
        )
        parts.append(
            f'<line x1="{margin - 5}" y1="{sy(yv):.2f}" x2="{margin}" y2="{sy(yv):.2f}" '
            f'stroke="black"/>'
        )
        parts.append(
            f'<text x="{margin - 8}" y="{sy(yv):.2f}" font-size="11" '
            f'text-anchor="end" dominant-baseline="middle">{yv:.3g}</text>'
        )
    xlabel = "gap (difference)" if curve.mode == LOCATION else "gap (ratio)"
    parts.append(
        f'<text x="{width / 2:.0f}" y="{height - 12}" font-size="12" '
        f'text-anchor="middle">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{height / 2:.0f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {height / 2:.0f})">simulated risk</text>'
    )
    for ei, label in enumerate(curve.estimator_labels):
        color = _SVG_COLORS[ei % len(_SVG_COLORS)]
        ys = curve.risks(label)
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = margin + 16 + 16 * ei
        parts.append(
            f'<line x1="{width - margin - 150}" y1="{ly - 4}" x2="{width - margin - 126}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{width - margin - 120}" y="{ly}" font-size="11">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
