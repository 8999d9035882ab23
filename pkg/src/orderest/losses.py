"""Bowl-shaped loss functions.

A loss is a nonnegative function W that vanishes at a single point
(0 for location losses, 1 for scale losses), decreases to the left of it,
increases to the right of it, and has a nondecreasing derivative W'.
Location losses are evaluated at ``estimate - parameter`` and scale losses
at ``estimate / parameter``; scale losses are only defined on the positive
half-line.
"""

from __future__ import annotations

import dataclasses
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError

LOCATION = "location"
SCALE = "scale"


@dataclasses.dataclass(frozen=True)
class LossSpec:
    """A bowl-shaped loss with its derivative.

    Attributes
    ----------
    kind:
        ``"location"`` (argument ``a - theta``) or ``"scale"``
        (argument ``a / theta``, positive domain).
    name:
        ``"squared_error"``, ``"linex"`` or ``"custom"``.
    w, w_prime:
        Vectorized callables for W and W'. ``w_prime`` is mandatory; the
        first-order equations consume W' directly, and numerical
        differentiation inside quadrature would compound error.
    argmin:
        The zero of W: 0 for location losses, 1 for scale losses.
    """

    kind: str
    name: str
    w: Callable[[np.ndarray], np.ndarray]
    w_prime: Callable[[np.ndarray], np.ndarray]
    argmin: float

    def __post_init__(self):
        if self.kind not in (LOCATION, SCALE):
            raise ConfigurationError(f"unknown loss kind {self.kind!r}")
        if self.w is None:
            raise ConfigurationError("loss requires a value function")
        if self.w_prime is None:
            raise ConfigurationError(
                f"loss {self.name!r} requires an explicit derivative"
            )

    def _check_domain(self, t):
        if self.kind == SCALE and np.any(np.asarray(t) <= 0.0):
            raise DomainError(
                "scale losses are defined on positive arguments only"
            )

    def value(self, t):
        """Evaluate W(t). Rejects t <= 0 for scale losses."""
        self._check_domain(t)
        return self.w(np.asarray(t, dtype=float))

    def deriv(self, t):
        """Evaluate W'(t). Rejects t <= 0 for scale losses."""
        self._check_domain(t)
        return self.w_prime(np.asarray(t, dtype=float))


def squared_error_loss(kind: str = LOCATION) -> LossSpec:
    """Squared error: W(t) = t^2 (location) or W(t) = (t - 1)^2 (scale)."""
    if kind == LOCATION:
        return LossSpec(
            kind=LOCATION,
            name="squared_error",
            w=lambda t: t * t,
            w_prime=lambda t: 2.0 * t,
            argmin=0.0,
        )
    return LossSpec(
        kind=SCALE,
        name="squared_error",
        w=lambda t: (t - 1.0) ** 2,
        w_prime=lambda t: 2.0 * (t - 1.0),
        argmin=1.0,
    )


def linex_loss() -> LossSpec:
    """Asymmetric location loss W(t) = e^t - t - 1."""
    return LossSpec(
        kind=LOCATION,
        name="linex",
        w=lambda t: np.expm1(t) - t,
        w_prime=np.expm1,
        argmin=0.0,
    )


def custom_loss(w, w_prime, kind: str = LOCATION, argmin: float | None = None) -> LossSpec:
    """Wrap user callables as a loss. The derivative must be supplied."""
    if argmin is None:
        argmin = 0.0 if kind == LOCATION else 1.0
    return LossSpec(kind=kind, name="custom", w=w, w_prime=w_prime, argmin=argmin)


def make_loss(name: str, kind: str = LOCATION) -> LossSpec:
    """Build a built-in loss from its CLI/config name."""
    if name == "squared_error":
        return squared_error_loss(kind)
    if name == "linex":
        if kind != LOCATION:
            raise ConfigurationError("the linex loss is catalogued for location problems only")
        return linex_loss()
    raise ConfigurationError(f"unknown loss name {name!r}")


@dataclasses.dataclass(frozen=True)
class ConditionReport:
    """Result of the numerical bowl-shape check.

    ``violations`` lists (condition, left grid point, right grid point)
    triples for every adjacent pair that breaks monotonicity of W on either
    side of its argmin or monotonicity of W'. The check can only certify
    behaviour on the sampled grid, not almost-everywhere properties.
    """

    violations: tuple
    grid_size: int

    @property
    def passed(self) -> bool:
        return not self.violations


def check_bowl_conditions(loss: LossSpec, grid) -> ConditionReport:
    """Check the bowl-shape conditions of ``loss`` on an ordered grid.

    Report-only: never raises for shape violations. The grid must contain
    at least 3 points inside the loss domain.
    """
    grid = np.asarray(sorted(float(g) for g in grid))
    if loss.kind == SCALE:
        grid = grid[grid > 0.0]
    if grid.size < 3:
        raise DomainError("need at least 3 grid points inside the loss domain")

    w = loss.value(grid)
    wp = loss.deriv(grid)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(w))))
    violations = []

    left = grid <= loss.argmin
    right = grid >= loss.argmin
    for i in range(grid.size - 1):
        a, b = grid[i], grid[i + 1]
        if left[i] and left[i + 1] and w[i + 1] > w[i] + tol:
            violations.append(("monotone_decreasing_left_of_argmin", a, b))
        if right[i] and right[i + 1] and w[i + 1] < w[i] - tol:
            violations.append(("monotone_increasing_right_of_argmin", a, b))
        if wp[i + 1] < wp[i] - tol:
            violations.append(("derivative_nondecreasing", a, b))
    if np.any(w < -tol):
        violations.append(("nonnegative", float(grid[np.argmin(w)]), float(np.min(w))))
    return ConditionReport(violations=tuple(violations), grid_size=grid.size)
