"""Equivariant estimators and the clipping improvement operator.

A location equivariant estimator of either component has the form
``X_i - psi(D)`` with ``D = X2 - X1``; a scale equivariant estimator has
the form ``psi(T) * X_i`` with ``T = X2 / X1``. Clipping ``psi`` into the
envelope of per-ancillary optima yields an estimator whose risk is never
worse, and strictly better whenever the clip binds with positive
probability; the catalog collects the named estimators (best unrestricted
equivariant, restricted maximum likelihood, and their clipped versions)
with their algebraically reduced forms.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from .errors import (
    CatalogKeyError,
    DomainError,
    IncompatibleEstimatorsError,
    InvalidBoundsError,
    NonexistentEstimatorError,
)
from .families import (
    LARGER,
    SMALLER,
    BivariateModel,
    BivariateNormal,
    Theta,
    _psi_cheriyan,
)
from .losses import LOCATION, SCALE
from .solver import PsiBounds

KINDS = ("blee", "bsee", "rmle", "improved_blee", "improved_bsee", "improved_rmle")

# absolute tolerance for deciding that two estimates differ
DIFFERENCE_ATOL = 1e-12


@dataclasses.dataclass(frozen=True)
class EquivariantEstimator:
    """A shift- or multiplier-form estimator of one ordered component.

    ``psi`` must accept numpy arrays of ancillary values. Instances are
    immutable and evaluation is pure.
    """

    mode: str
    target: str
    psi: Callable
    label: str

    def evaluate(self, x1, x2):
        """Estimate from data; vectorized over paired observations."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if self.mode == SCALE:
            if np.any(x1 <= 0.0) or np.any(x2 <= 0.0):
                raise DomainError("scale-mode data must be strictly positive")
            anc = x2 / x1
            base = x1 if self.target == SMALLER else x2
            out = np.asarray(self.psi(anc), dtype=float) * base
        else:
            anc = x2 - x1
            base = x1 if self.target == SMALLER else x2
            out = base - np.asarray(self.psi(anc), dtype=float)
        if np.isscalar(x1) or np.ndim(x1) == 0:
            return float(out)
        return out


def custom_estimator(mode: str, target: str, psi, label: str = "custom") -> EquivariantEstimator:
    """Wrap a user-supplied shift/multiplier function."""
    if mode not in (LOCATION, SCALE):
        raise DomainError(f"unknown mode {mode!r}")
    if target not in (SMALLER, LARGER):
        raise DomainError(f"unknown target {target!r}")
    return EquivariantEstimator(mode=mode, target=target, psi=psi, label=label)


# ---------------------------------------------------------------------------
#  Clipping
# ---------------------------------------------------------------------------


def _improved_label(label: str) -> str:
    return label if label.startswith("improved") else f"improved {label}"


def clip_improve(est: EquivariantEstimator, bounds: PsiBounds) -> EquivariantEstimator:
    """Clip the estimator's shift/multiplier into the envelope.

    The result's psi is the median of {lower, psi, upper} pointwise;
    infinite envelope sides clip one-sidedly. Raises
    ``InvalidBoundsError`` if the envelope is inverted at an evaluated
    ancillary value.
    """

    def psi_star(t):
        t = np.asarray(t, dtype=float)
        lo = np.asarray(bounds.lower(t), dtype=float)
        hi = np.asarray(bounds.upper(t), dtype=float)
        if np.any(lo > hi):
            bad = np.atleast_1d(t)[np.atleast_1d(lo > hi)][0]
            raise InvalidBoundsError(f"envelope inverted (lower > upper) at ancillary {bad}")
        return np.minimum(np.maximum(np.asarray(est.psi(t), dtype=float), lo), hi)

    return EquivariantEstimator(
        mode=est.mode, target=est.target, psi=psi_star, label=_improved_label(est.label)
    )


def clip_improve_partial(
    est: EquivariantEstimator, bounds: PsiBounds, fraction: float
) -> EquivariantEstimator:
    """Move psi a fraction of the way toward the envelope where it violates it.

    ``fraction=1`` reproduces full clipping; any fraction in [0, 1] yields
    an estimator whose risk is no worse than the original's.
    """
    if not 0.0 <= fraction <= 1.0:
        raise DomainError("fraction must lie in [0, 1]")
    clipped = clip_improve(est, bounds)

    def psi_partial(t):
        t = np.asarray(t, dtype=float)
        base = np.asarray(est.psi(t), dtype=float)
        return base + fraction * (np.asarray(clipped.psi(t), dtype=float) - base)

    return EquivariantEstimator(
        mode=est.mode,
        target=est.target,
        psi=psi_partial,
        label=f"partial({fraction:g}) {est.label}",
    )


def estimate_difference_probability(
    base: EquivariantEstimator,
    improved: EquivariantEstimator,
    model: BivariateModel,
    theta: Theta,
    n: int,
    seed,
) -> tuple:
    """Monte Carlo estimate of P[base and improved estimates differ].

    Returns (probability, binomial standard error); the two estimates count
    as different when they disagree by more than an absolute 1e-12.
    """
    if base.mode != improved.mode or base.target != improved.target:
        raise IncompatibleEstimatorsError("estimators must share mode and target")
    if base.mode != model.mode:
        raise IncompatibleEstimatorsError("estimator mode does not match the model")
    draws = model.sample(theta, n, seed)
    x1, x2 = draws[:, 0], draws[:, 1]
    differ = np.abs(base.evaluate(x1, x2) - improved.evaluate(x1, x2)) > DIFFERENCE_ATOL
    p = float(np.mean(differ))
    se = math.sqrt(p * (1.0 - p) / n)
    return p, se


# ---------------------------------------------------------------------------
#  Named-estimator catalog
# ---------------------------------------------------------------------------


def _const(c):
    return lambda t: np.full_like(np.asarray(t, dtype=float), c)


def _bvn_entries(model: BivariateNormal, target: str) -> dict:
    slope = model.slope_smaller if target == SMALLER else model.slope_larger

    def rmle_psi(t):
        t = np.asarray(t, dtype=float)
        if slope < 0.0:
            return np.maximum(0.0, slope * t)
        if slope > 0.0:
            return np.minimum(0.0, slope * t)
        return np.zeros_like(t)

    # the clipped best equivariant estimator coincides with the restricted
    # maximum likelihood estimator for this family; in the degenerate
    # regime (slope exactly zero) both reduce to the unclipped estimator
    return {
        "blee": (_const(0.0), "BLEE"),
        "rmle": (rmle_psi, "RMLE"),
        "improved_blee": (rmle_psi, "improved BLEE"),
        "improved_rmle": (rmle_psi, "improved RMLE"),
    }


def _dep_exp_entries(model, target: str) -> dict:
    if target == LARGER:
        def nonexistent(_t):
            raise NonexistentEstimatorError(
                "no best equivariant shift exists for the larger component of "
                "this family: the defining exponential moment diverges"
            )
        return {
            "blee": ("nonexistent", nonexistent),
            "improved_blee": ("nonexistent", nonexistent),
        }
    ln6 = math.log(6.0)

    def improved_blee_psi(t):
        t = np.asarray(t, dtype=float)
        return np.maximum(np.log(4.0 * (2.0 + t) / (1.0 + t)), ln6)

    return {
        "blee": (_const(ln6), "BLEE"),
        "improved_blee": (improved_blee_psi, "improved BLEE"),
    }


def _indep_exp_entries(model, target: str) -> dict:
    c = model.s1 * model.s2 / (model.s1 + model.s2)
    if target == SMALLER:
        s1 = model.s1

        def improved_blee_psi(t):
            return np.maximum(c - np.asarray(t, dtype=float), s1)

        def rmle_psi(t):
            return np.maximum(0.0, -np.asarray(t, dtype=float))

        def improved_rmle_psi(t):
            return np.maximum(0.0, -np.asarray(t, dtype=float)) + c

        return {
            "blee": (_const(s1), "BLEE"),
            "rmle": (rmle_psi, "RMLE"),
            "improved_blee": (improved_blee_psi, "improved BLEE"),
            "improved_rmle": (improved_rmle_psi, "improved RMLE"),
        }
    s2 = model.s2

    def improved_blee_psi(t):
        t = np.asarray(t, dtype=float)
        return np.maximum(c, np.minimum(s2, c + np.maximum(t, 0.0)))

    return {
        "blee": (_const(s2), "BLEE"),
        "rmle": (_const(0.0), "RMLE"),
        "improved_blee": (improved_blee_psi, "improved BLEE"),
        "improved_rmle": (_const(c), "improved RMLE"),
    }


def _cheriyan_entries(model, target: str) -> dict:
    third = 1.0 / 3.0
    if target == SMALLER:
        def improved_bsee_psi(t):
            return np.minimum(third, _psi_cheriyan(model, SMALLER, 1.0, t))
    else:
        def improved_bsee_psi(t):
            return np.maximum(_psi_cheriyan(model, LARGER, 1.0, t), third)
    return {
        "bsee": (_const(third), "BSEE"),
        "improved_bsee": (improved_bsee_psi, "improved BSEE"),
    }


def _power_uniform_entries(model, target: str) -> dict:
    kappa = (model.a1 + model.a2 + 2.0) / (model.a1 + model.a2 + 1.0)
    if target == SMALLER:
        b1 = (model.a1 + 2.0) / (model.a1 + 1.0)

        def improved_bsee_psi(t):
            t = np.asarray(t, dtype=float)
            return np.maximum(kappa, np.minimum(b1, kappa * np.maximum(1.0, t)))

        return {
            "bsee": (_const(b1), "BSEE"),
            "improved_bsee": (improved_bsee_psi, "improved BSEE"),
        }
    b2 = (model.a2 + 2.0) / (model.a2 + 1.0)

    def improved_bsee_psi(t):
        t = np.asarray(t, dtype=float)
        return np.maximum(kappa * np.maximum(1.0, 1.0 / t), b2)

    def rmle_psi(t):
        return np.maximum(1.0, 1.0 / np.asarray(t, dtype=float))

    def improved_rmle_psi(t):
        return kappa * np.maximum(1.0, 1.0 / np.asarray(t, dtype=float))

    return {
        "bsee": (_const(b2), "BSEE"),
        "improved_bsee": (improved_bsee_psi, "improved BSEE"),
        "rmle": (rmle_psi, "RMLE"),
        "improved_rmle": (improved_rmle_psi, "improved RMLE"),
    }


def _indep_gamma_entries(model, target: str) -> dict:
    k = model.a1 + model.a2 + 1.0
    if target == SMALLER:
        a1, a2 = model.a1, model.a2

        def improved_bsee_psi(t):
            t = np.asarray(t, dtype=float)
            return np.minimum(1.0 / (a1 + 1.0), (1.0 + t) / k)

        def rmle_psi(t):
            t = np.asarray(t, dtype=float)
            return np.minimum(1.0 / a1, (1.0 + t) / (a1 + a2))

        def improved_rmle_psi(t):
            t = np.asarray(t, dtype=float)
            return np.minimum(1.0 / a1, (1.0 + t) / k)

        return {
            "bsee": (_const(1.0 / (a1 + 1.0)), "BSEE"),
            "improved_bsee": (improved_bsee_psi, "improved BSEE"),
            "rmle": (rmle_psi, "RMLE"),
            "improved_rmle": (improved_rmle_psi, "improved RMLE"),
        }
    a2 = model.a2

    def improved_bsee_psi(t):
        t = np.asarray(t, dtype=float)
        return np.maximum(1.0 / (a2 + 1.0), (1.0 + 1.0 / t) / k)

    return {
        "bsee": (_const(1.0 / (a2 + 1.0)), "BSEE"),
        "improved_bsee": (improved_bsee_psi, "improved BSEE"),
    }


_ENTRY_BUILDERS = {
    "bvn": _bvn_entries,
    "dep_exp_gamma": _dep_exp_entries,
    "indep_exp": _indep_exp_entries,
    "cheriyan_gamma": _cheriyan_entries,
    "power_uniform": _power_uniform_entries,
    "indep_gamma": _indep_gamma_entries,
}


def catalog_kinds(model: BivariateModel, target: str) -> tuple:
    """Names of the catalogued estimators for this model/target."""
    entries = _ENTRY_BUILDERS[model.name](model, target)
    return tuple(sorted(entries))


def catalog_estimator(model: BivariateModel, target: str, kind: str) -> EquivariantEstimator:
    """Look up a named estimator for ``model`` and ``target``.

    Raises ``CatalogKeyError`` for unknown keys and
    ``NonexistentEstimatorError`` where the named estimator provably does
    not exist for the family.
    """
    if target not in (SMALLER, LARGER):
        raise CatalogKeyError(f"unknown target {target!r}")
    builder = _ENTRY_BUILDERS.get(model.name)
    if builder is None:
        raise CatalogKeyError(f"model {model.name!r} has no catalog entries")
    entries = builder(model, target)
    entry = entries.get(kind)
    if entry is None:
        available = ", ".join(sorted(entries))
        raise CatalogKeyError(
            f"no catalogued {kind!r} estimator for {model.name}:{target}; "
            f"available kinds: {available}"
        )
    first, second = entry
    if first == "nonexistent":
        second(None)  # raises NonexistentEstimatorError with the explanation
    psi, label = first, second
    return EquivariantEstimator(mode=model.mode, target=target, psi=psi, label=label)
