"""Paired-data analysis pipeline.

Takes paired measurements whose means are believed to be ordered, fits a
correlated Gaussian model by plugging in sample moments, classifies which
side of the degeneracy boundary the plug-ins fall on, and applies the
clipped-estimator correction to both sample means.

Plug-in convention: the sample variances (denominator n - 1) are divided
by n + 1 to produce the variance plug-ins for the pair of means. Dividing
by the row count would be the usual choice; the n + 1 divisor is kept
deliberately and footnoted in the report because the published analysis
this pipeline reproduces uses it. The correction itself is unaffected:
the blended estimate is invariant to any common rescaling of the
covariance plug-ins.
"""

from __future__ import annotations

import csv
import dataclasses
import importlib.resources
import math

import numpy as np

from .errors import DegenerateDataError, DomainError

PLUGIN_NOTE = (
    "variance plug-ins divide the sample variance by n + 1 rather than n, "
    "matching the published analysis this pipeline reproduces"
)


@dataclasses.dataclass(frozen=True)
class PairedDataset:
    """Labelled paired observations."""

    labels: tuple
    value_a: tuple
    value_b: tuple

    def __post_init__(self):
        if len(self.labels) != len(self.value_a) or len(self.labels) != len(self.value_b):
            raise DomainError("labels and value columns must have equal length")
        if len(self.labels) < 2:
            raise DomainError("paired analysis needs at least 2 rows")
        values = np.concatenate([self.value_a, self.value_b])
        if not np.all(np.isfinite(values)):
            raise DomainError("paired data must be finite")

    @property
    def n(self) -> int:
        return len(self.labels)


def load_paired_csv(path) -> PairedDataset:
    """Read a paired dataset from CSV (headered or headerless).

    Columns: label, value_a, value_b.
    """
    labels, a, b = [], [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise DomainError(f"expected 3 columns (label,value_a,value_b), got {len(row)}")
            try:
                va, vb = float(row[1]), float(row[2])
            except ValueError:
                if not labels:
                    continue  # header row
                raise DomainError(f"non-numeric value in row {row!r}") from None
            labels.append(row[0])
            a.append(va)
            b.append(vb)
    return PairedDataset(labels=tuple(labels), value_a=tuple(a), value_b=tuple(b))


def bundled_dataset_path() -> str:
    """Path of the bundled sprinter speed fixture."""
    return str(importlib.resources.files("orderest").joinpath("data/uk_sprinters.csv"))


@dataclasses.dataclass(frozen=True)
class AnalysisReport:
    """Summary statistics, plug-ins, regime, and corrected estimates."""

    n: int
    mean_a: float
    mean_b: float
    var_a: float
    var_b: float
    correlation: float
    plugin_var_a: float
    plugin_var_b: float
    plugin_rho: float
    plugin_divisor: int
    regime_smaller: str
    regime_larger: str
    blend: float
    improved_smaller: float
    improved_larger: float
    note: str = PLUGIN_NOTE

    def lines(self) -> list:
        return [
            f"rows                 : {self.n}",
            f"sample means         : {self.mean_a:.3f}  {self.mean_b:.3f}",
            f"sample variances     : {self.var_a:.3f}  {self.var_b:.3f}",
            f"sample correlation   : {self.correlation:.3f}",
            f"plug-in variances    : {self.plugin_var_a:.4f}  {self.plugin_var_b:.4f}"
            f"  (divisor {self.plugin_divisor})",
            f"plug-in correlation  : {self.plugin_rho:.3f}",
            f"regime (smaller mean): {self.regime_smaller}",
            f"regime (larger mean) : {self.regime_larger}",
            f"blended estimate     : {self.blend:.4f}",
            f"improved smaller mean: {self.improved_smaller:.2f}",
            f"improved larger mean : {self.improved_larger:.2f}",
            f"note: {self.note}",
        ]


def analyze_paired(data: PairedDataset) -> AnalysisReport:
    """Summaries, regime classification, and corrected mean estimates.

    Requires both columns to vary (a constant column makes the plug-in
    correlation undefined).
    """
    a = np.asarray(data.value_a, dtype=float)
    b = np.asarray(data.value_b, dtype=float)
    n = data.n
    mean_a, mean_b = float(np.mean(a)), float(np.mean(b))
    var_a = float(np.var(a, ddof=1))
    var_b = float(np.var(b, ddof=1))
    if var_a <= 0.0 or var_b <= 0.0:
        raise DegenerateDataError("a column is constant; correlation is undefined")
    corr = float(np.corrcoef(a, b)[0, 1])

    divisor = n + 1
    pv_a, pv_b = var_a / divisor, var_b / divisor
    rho = corr
    s1, s2 = math.sqrt(pv_a), math.sqrt(pv_b)

    spread = pv_a + pv_b - 2.0 * rho * s1 * s2
    blend = (s2 * (s2 - rho * s1) * mean_a + s1 * (s1 - rho * s2) * mean_b) / spread

    if rho * s2 > s1:
        regime_smaller = "rho*sd2 > sd1: corrected estimate moves up"
        improved_smaller = max(mean_a, blend)
    elif rho * s2 < s1:
        regime_smaller = "rho*sd2 < sd1: corrected estimate moves down"
        improved_smaller = min(mean_a, blend)
    else:
        regime_smaller = "rho*sd2 = sd1: no correction available"
        improved_smaller = mean_a

    if rho * s1 < s2:
        regime_larger = "rho*sd1 < sd2: corrected estimate moves up"
        improved_larger = max(mean_b, blend)
    elif rho * s1 > s2:
        regime_larger = "rho*sd1 > sd2: corrected estimate moves down"
        improved_larger = min(mean_b, blend)
    else:
        regime_larger = "rho*sd1 = sd2: no correction available"
        improved_larger = mean_b

    return AnalysisReport(
        n=n,
        mean_a=mean_a,
        mean_b=mean_b,
        var_a=var_a,
        var_b=var_b,
        correlation=corr,
        plugin_var_a=pv_a,
        plugin_var_b=pv_b,
        plugin_rho=rho,
        plugin_divisor=divisor,
        regime_smaller=regime_smaller,
        regime_larger=regime_larger,
        blend=blend,
        improved_smaller=improved_smaller,
        improved_larger=improved_larger,
    )
