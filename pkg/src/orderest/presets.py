"""Built-in simulation panel configurations.

Fourteen named panels: eight location panels comparing the best
equivariant estimator of the smaller mean with its clipped version under
correlated Gaussian pairs, and six scale panels comparing four estimators
of the smaller scale under independent gamma pairs. Panel grids run over
the gap (difference 0..10, ratio 1..10) with common random numbers on.
"""

from __future__ import annotations

import dataclasses

from .estimators import catalog_estimator
from .families import SMALLER, make_model
from .losses import make_loss
from .risksim import RiskCurve, risk_curve

LOCATION_GRID = tuple(float(x) for x in range(0, 11))
SCALE_GRID = tuple(float(x) for x in range(1, 11))


@dataclasses.dataclass(frozen=True)
class PanelPreset:
    """One figure panel: model configuration plus estimator line-up."""

    name: str
    model_name: str
    hyper: tuple
    estimator_kinds: tuple
    lambda_grid: tuple
    target: str = SMALLER

    def build_model(self):
        return make_model(self.model_name, **dict(self.hyper))

    def build_estimators(self):
        model = self.build_model()
        return [catalog_estimator(model, self.target, kind) for kind in self.estimator_kinds]


def _bvn_panel(name, s1, s2, rho):
    return PanelPreset(
        name=name,
        model_name="bvn",
        hyper=(("s1", s1), ("s2", s2), ("rho", rho)),
        estimator_kinds=("blee", "improved_blee"),
        lambda_grid=LOCATION_GRID,
    )


def _gamma_panel(name, a1, a2):
    return PanelPreset(
        name=name,
        model_name="indep_gamma",
        hyper=(("a1", a1), ("a2", a2)),
        estimator_kinds=("bsee", "rmle", "improved_bsee", "improved_rmle"),
        lambda_grid=SCALE_GRID,
    )


PRESETS = {
    p.name: p
    for p in (
        _bvn_panel("fig1a", 0.2, 0.4, -0.9),
        _bvn_panel("fig1b", 10.0, 0.4, -0.5),
        _bvn_panel("fig1c", 0.4, 10.0, -0.2),
        _bvn_panel("fig1d", 2.0, 5.0, 0.0),
        _bvn_panel("fig1e", 10.0, 0.4, 0.0),
        _bvn_panel("fig1f", 0.4, 10.0, 0.2),
        _bvn_panel("fig1g", 10.0, 0.4, 0.5),
        _bvn_panel("fig1h", 0.2, 0.4, 0.9),
        _gamma_panel("fig2a", 0.2, 0.2),
        _gamma_panel("fig2b", 0.2, 1.0),
        _gamma_panel("fig2c", 2.0, 1.0),
        _gamma_panel("fig2d", 5.0, 1.0),
        _gamma_panel("fig2e", 5.0, 10.0),
        _gamma_panel("fig2f", 15.0, 15.0),
    )
}


def run_preset(name: str, n: int = 10_000, seed: int = 0, common_random_numbers: bool = True) -> RiskCurve:
    """Simulate one panel's risk curve."""
    preset = PRESETS[name]
    model = preset.build_model()
    loss = make_loss("squared_error", model.mode)
    return risk_curve(
        model,
        loss,
        preset.build_estimators(),
        preset.lambda_grid,
        n=n,
        seed=seed,
        common_random_numbers=common_random_numbers,
    )
