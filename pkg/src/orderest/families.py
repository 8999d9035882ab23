"""Catalog of bivariate probability models.

Six named families, each exposing the standardized joint density, an exact
sampler, the geometry the conditional-risk solver needs (conditional kernel
support and a finite window carrying essentially all its mass), marginal
densities, and the closed-form conditional minimizers and envelopes where
they are known.

Location families place the parameter pair as shifts and use the ancillary
difference D = X2 - X1; scale families place it as multipliers and use the
ancillary ratio T = X2 / X1. The restricted parameter space orders the
pair: theta1 <= theta2.
"""

from __future__ import annotations

import dataclasses
import math
from abc import ABC, abstractmethod
from typing import Callable

import numpy as np
from scipy import special as sps

from . import _quad
from .errors import (
    ConfigurationError,
    DegenerateConditionalError,
    DomainError,
)
from .losses import LOCATION, SCALE, LossSpec

SMALLER = "smaller"
LARGER = "larger"

MODEL_NAMES = (
    "bvn",
    "dep_exp_gamma",
    "indep_exp",
    "cheriyan_gamma",
    "power_uniform",
    "indep_gamma",
)


@dataclasses.dataclass(frozen=True)
class Theta:
    """An ordered parameter pair from the restricted space theta1 <= theta2."""

    theta1: float
    theta2: float

    def __post_init__(self):
        if not (np.isfinite(self.theta1) and np.isfinite(self.theta2)):
            raise DomainError("theta components must be finite")
        if self.theta1 > self.theta2:
            raise DomainError(
                f"restricted space requires theta1 <= theta2, "
                f"got ({self.theta1}, {self.theta2})"
            )


@dataclasses.dataclass(frozen=True)
class ConditionalKernel:
    """Unnormalized conditional density of the pivot given the ancillary.

    ``fn`` maps an array of pivot values to kernel values. ``support`` may
    have infinite endpoints; ``window`` is a finite interval holding all but
    a negligible fraction of the kernel mass (tails are rechecked by the
    integrator). ``proper`` is False when the conditioning value is outside
    the ancillary's support, in which case ``fn`` must not be used.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    support: tuple
    window: tuple
    proper: bool
    cond_value: float


class BivariateModel(ABC):
    """Base class for the model catalog.

    Concrete models are immutable after construction: hyperparameters are
    validated once and all methods are pure, so instances can be shared
    freely across threads.
    """

    name: str = ""
    mode: str = ""
    support_desc: str = ""
    kink_on_diagonal: bool = False

    @property
    def hyper(self) -> dict:
        return {}

    # -- densities ---------------------------------------------------------

    @abstractmethod
    def joint_density(self, z1, z2):
        """Standardized joint density; zero off the support."""

    @abstractmethod
    def joint_log_density(self, z1, z2):
        """Log of the standardized joint density; -inf off the support.

        Conditional kernels are assembled in log space so that large
        location shifts (which scale the kernel by factors far below the
        smallest positive float) cannot underflow to an identically zero
        integrand.
        """

    @abstractmethod
    def marginal_density(self, component: int, s):
        """Standardized marginal density of component 1 or 2."""

    @abstractmethod
    def marginal_geometry(self, component: int) -> tuple:
        """(support, window) of the standardized marginal."""

    @abstractmethod
    def mass_window(self) -> tuple:
        """((a1, b1), (a2, b2)) window holding all but ~1e-9 of the mass."""

    # -- sampling ----------------------------------------------------------

    @abstractmethod
    def sample_standardized(self, n: int, rng: np.random.Generator):
        """n i.i.d. standardized pairs as arrays (z1, z2)."""

    def sample(self, theta: Theta, n: int, seed) -> np.ndarray:
        """n i.i.d. draws at parameter ``theta`` as an (n, 2) array.

        ``seed`` may be an integer or a ``numpy.random.Generator``.
        Deterministic given an integer seed.
        """
        if n < 1:
            raise DomainError("sample size must be at least 1")
        if self.mode == SCALE and theta.theta1 <= 0:
            raise DomainError("scale parameters must be strictly positive")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        z1, z2 = self.sample_standardized(int(n), rng)
        if self.mode == LOCATION:
            x1, x2 = theta.theta1 + z1, theta.theta2 + z2
        else:
            x1, x2 = theta.theta1 * z1, theta.theta2 * z2
        return np.column_stack([x1, x2])

    # -- conditional structure ---------------------------------------------

    @abstractmethod
    def _cond_geometry(self, target: str, v: float) -> tuple:
        """(support, window, proper) of the conditional kernel at value v."""

    def cond_kernel(self, target: str, v: float) -> ConditionalKernel:
        """Unnormalized conditional kernel at conditioning value ``v``.

        For location models ``v`` is the gap-adjusted ancillary offset
        (t - gap); for scale models it is the gap-adjusted ratio (t / gap).
        The kernel is rescaled by its largest probed log value, which is
        harmless (normalization cancels where the kernel is consumed) and
        keeps extreme gaps from underflowing the integrand to zero.
        """
        _check_target(target)
        v = float(v)
        support, window, proper = self._cond_geometry(target, v)
        if self.mode == LOCATION:
            if target == SMALLER:
                logfn = lambda s: self.joint_log_density(s, s + v)
            else:
                logfn = lambda s: self.joint_log_density(s - v, s)
        else:
            if target == SMALLER:
                logfn = lambda s: _safe_log(s) + self.joint_log_density(s, s * v)
            else:
                logfn = lambda s: _safe_log(s) + self.joint_log_density(s / v, s)

        ref = 0.0
        if proper:
            probe = np.linspace(window[0], window[1], 129)[1:-1]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                lv = np.asarray(logfn(probe), dtype=float)
            finite = lv[np.isfinite(lv)]
            if finite.size:
                ref = float(finite.max())

        def fn(s, _logfn=logfn, _ref=ref):
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                lv = np.asarray(_logfn(np.asarray(s, dtype=float)), dtype=float) - _ref
            out = np.exp(np.minimum(lv, 700.0))
            return np.where(np.isnan(lv), 0.0, out)

        return ConditionalKernel(fn=fn, support=support, window=window, proper=proper, cond_value=v)

    def lambda_sup(self, target: str, t: float) -> float:
        """Least upper bound of gaps with a proper conditional at ancillary t."""
        return math.inf


def _check_target(target):
    if target not in (SMALLER, LARGER):
        raise DomainError(f"target must be {SMALLER!r} or {LARGER!r}, got {target!r}")


def _as_float_array(x):
    return np.asarray(x, dtype=float)


def _safe_log(x):
    x = _as_float_array(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0.0, np.log(np.clip(x, 1e-308, None)), -np.inf)


# ===========================================================================
#  Location families
# ===========================================================================


class BivariateNormal(BivariateModel):
    """Correlated Gaussian pair with known spreads and correlation."""

    name = "bvn"
    mode = LOCATION
    support_desc = "full plane"

    def __init__(self, s1: float, s2: float, rho: float):
        if s1 <= 0 or s2 <= 0:
            raise ConfigurationError("spreads s1, s2 must be positive")
        if not -1.0 < rho < 1.0:
            raise ConfigurationError("rho must lie strictly inside (-1, 1)")
        self.s1 = float(s1)
        self.s2 = float(s2)
        self.rho = float(rho)
        # variance of Z2 - Z1 and the two regression slopes on it
        self.diff_var = s1 * s1 + s2 * s2 - 2.0 * rho * s1 * s2
        self.slope_smaller = s1 * (rho * s2 - s1) / self.diff_var
        self.slope_larger = s2 * (s2 - rho * s1) / self.diff_var
        self.cond_sd = s1 * s2 * math.sqrt((1.0 - rho * rho) / self.diff_var)

    @property
    def hyper(self):
        return {"s1": self.s1, "s2": self.s2, "rho": self.rho}

    def joint_density(self, z1, z2):
        return np.exp(self.joint_log_density(z1, z2))

    def joint_log_density(self, z1, z2):
        z1, z2 = _as_float_array(z1), _as_float_array(z2)
        q = (
            (z1 / self.s1) ** 2
            - 2.0 * self.rho * z1 * z2 / (self.s1 * self.s2)
            + (z2 / self.s2) ** 2
        ) / (1.0 - self.rho**2)
        log_norm = math.log(2.0 * math.pi * self.s1 * self.s2) + 0.5 * math.log(1.0 - self.rho**2)
        return -0.5 * q - log_norm

    def marginal_density(self, component, s):
        sd = self.s1 if component == 1 else self.s2
        s = _as_float_array(s)
        return np.exp(-0.5 * (s / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi))

    def marginal_geometry(self, component):
        sd = self.s1 if component == 1 else self.s2
        return (-math.inf, math.inf), (-10.0 * sd, 10.0 * sd)

    def mass_window(self):
        return (-6.0 * self.s1, 6.0 * self.s1), (-6.0 * self.s2, 6.0 * self.s2)

    def sample_standardized(self, n, rng):
        e1 = rng.standard_normal(n)
        e2 = rng.standard_normal(n)
        z1 = self.s1 * e1
        z2 = self.s2 * (self.rho * e1 + math.sqrt(1.0 - self.rho**2) * e2)
        return z1, z2

    def _cond_geometry(self, target, v):
        slope = self.slope_smaller if target == SMALLER else self.slope_larger
        mean = slope * v
        half = 12.0 * self.cond_sd
        return (-math.inf, math.inf), (mean - half, mean + half), True


class WedgeExpGamma(BivariateModel):
    """Dependent pair supported on the wedge 0 < z1 < z2.

    The standardized pair is distributed as the order statistics of two
    i.i.d. gamma variates with shape 2 and unit rate.
    """

    name = "dep_exp_gamma"
    mode = LOCATION
    support_desc = "wedge 0 < z1 < z2"
    kink_on_diagonal = True

    def joint_density(self, z1, z2):
        z1, z2 = _as_float_array(z1), _as_float_array(z2)
        inside = (z1 > 0.0) & (z1 < z2)
        return np.where(inside, 2.0 * z1 * z2 * np.exp(-np.clip(z1 + z2, 0.0, 1400.0)), 0.0)

    def joint_log_density(self, z1, z2):
        z1, z2 = _as_float_array(z1), _as_float_array(z2)
        inside = (z1 > 0.0) & (z1 < z2)
        logv = math.log(2.0) + _safe_log(z1) + _safe_log(z2) - z1 - z2
        return np.where(inside, logv, -np.inf)

    def marginal_density(self, component, s):
        s = _as_float_array(s)
        pos = s > 0.0
        if component == 1:
            val = 2.0 * s * (1.0 + s) * np.exp(-2.0 * np.clip(s, 0.0, None))
        else:
            es = np.exp(-np.clip(s, 0.0, None))
            val = 2.0 * s * es * (1.0 - (1.0 + s) * es)
        return np.where(pos, val, 0.0)

    def marginal_geometry(self, component):
        hi = 25.0 if component == 1 else 45.0
        return (0.0, math.inf), (0.0, hi)

    def mass_window(self):
        return (0.0, 35.0), (0.0, 40.0)

    def sample_standardized(self, n, rng):
        g = rng.gamma(shape=2.0, scale=1.0, size=(n, 2))
        return g.min(axis=1), g.max(axis=1)

    def _cond_geometry(self, target, v):
        if v <= 0.0:
            return (0.0, math.inf), (0.0, 1.0), False
        if target == SMALLER:
            return (0.0, math.inf), (0.0, 25.0), True
        return (v, math.inf), (v, v + 25.0), True

    def lambda_sup(self, target, t):
        # D > gap almost surely, so the conditional is proper only for gap < t
        return float(t)


class IndepExponential(BivariateModel):
    """Independent shifted-exponential pair with known spreads."""

    name = "indep_exp"
    mode = LOCATION
    support_desc = "positive quadrant"

    def __init__(self, s1: float, s2: float):
        if s1 <= 0 or s2 <= 0:
            raise ConfigurationError("spreads s1, s2 must be positive")
        self.s1 = float(s1)
        self.s2 = float(s2)
        self.rate = 1.0 / s1 + 1.0 / s2

    @property
    def hyper(self):
        return {"s1": self.s1, "s2": self.s2}

    def joint_density(self, z1, z2):
        z1, z2 = _as_float_array(z1), _as_float_array(z2)
        inside = (z1 > 0.0) & (z2 > 0.0)
        expo = np.clip(z1, 0.0, None) / self.s1 + np.clip(z2, 0.0, None) / self.s2
        return np.where(inside, np.exp(-np.clip(expo, 0.0, 1400.0)) / (self.s1 * self.s2), 0.0)

    def joint_log_density(self, z1, z2):
        z1, z2 = _as_float_array(z1), _as_float_array(z2)
        inside = (z1 > 0.0) & (z2 > 0.0)
        logv = -z1 / self.s1 - z2 / self.s2 - math.log(self.s1 * self.s2)
        return np.where(inside, logv, -np.inf)

    def marginal_density(self, component, s):
        sd = self.s1 if component == 1 else self.s2
        s = _as_float_array(s)
        return np.where(s > 0.0, np.exp(-np.clip(s, 0.0, None) / sd) / sd, 0.0)

    def marginal_geometry(self, component):
        sd = self.s1 if component == 1 else self.s2
        return (0.0, math.inf), (0.0, 35.0 * sd)

    def mass_window(self):
        return (0.0, 30.0 * self.s1), (0.0, 30.0 * self.s2)

    def sample_standardized(self, n, rng):
        return self.s1 * rng.standard_exponential(n), self.s2 * rng.standard_exponential(n)

    def _cond_geometry(self, target, v):
        a = max(0.0, -v) if target == SMALLER else max(0.0, v)
        return (a, math.inf), (a, a + 35.0 / self.rate), True


# ===========================================================================
#  Scale families
# ===========================================================================


class CheriyanGamma(BivariateModel):
    """Dependent gamma pair built from a shared exponential component.

    Standardized components are Z1 = U0 + U1 and Z2 = U0 + U2 for i.i.d.
    unit exponentials U0, U1, U2; each marginal is gamma with shape 2.
    """

    name = "cheriyan_gamma"
    mode = SCALE
    support_desc = "positive quadrant"
    kink_on_diagonal = True

    def joint_density(self, z1, z2):
        z1, z2 = _as_float_array(z1), _as_float_array(z2)
        inside = (z1 > 0.0) & (z2 > 0.0)
        zmax = np.maximum(z1, z2)
        zmin = np.minimum(z1, z2)
        val = np.exp(-np.clip(zmax, 0.0, 1400.0)) * (-np.expm1(-np.clip(zmin, 0.0, None)))
        return np.where(inside, val, 0.0)

    def joint_log_density(self, z1, z2):
        z1, z2 = _as_float_array(z1), _as_float_array(z2)
        inside = (z1 > 0.0) & (z2 > 0.0)
        zmax = np.maximum(z1, z2)
        zmin = np.clip(np.minimum(z1, z2), 0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            logv = -zmax + np.log(-np.expm1(-np.clip(zmin, 1e-308, None)))
        return np.where(inside, logv, -np.inf)

    def marginal_density(self, component, s):
        s = _as_float_array(s)
        return np.where(s > 0.0, s * np.exp(-np.clip(s, 0.0, None)), 0.0)

    def marginal_geometry(self, component):
        return (0.0, math.inf), (0.0, 40.0)

    def mass_window(self):
        return (0.0, 30.0), (0.0, 30.0)

    def sample_standardized(self, n, rng):
        u = rng.standard_exponential((n, 3))
        return u[:, 0] + u[:, 1], u[:, 0] + u[:, 2]

    def _cond_geometry(self, target, v):
        if v <= 0.0:
            return (0.0, math.inf), (0.0, 1.0), False
        rate = max(1.0, v) if target == SMALLER else max(1.0, 1.0 / v)
        return (0.0, math.inf), (0.0, 50.0 / rate), True


class PowerUniform(BivariateModel):
    """Independent power-function pair on the unit square."""

    name = "power_uniform"
    mode = SCALE
    support_desc = "unit square"

    def __init__(self, a1: float, a2: float):
        if a1 <= 0 or a2 <= 0:
            raise ConfigurationError("shape parameters a1, a2 must be positive")
        self.a1 = float(a1)
        self.a2 = float(a2)

    @property
    def hyper(self):
        return {"a1": self.a1, "a2": self.a2}

    def joint_density(self, z1, z2):
        z1, z2 = _as_float_array(z1), _as_float_array(z2)
        inside = (z1 > 0.0) & (z1 < 1.0) & (z2 > 0.0) & (z2 < 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (
                self.a1
                * self.a2
                * np.power(np.clip(z1, 1e-308, None), self.a1 - 1.0)
                * np.power(np.clip(z2, 1e-308, None), self.a2 - 1.0)
            )
        return np.where(inside, val, 0.0)

    def joint_log_density(self, z1, z2):
        z1, z2 = _as_float_array(z1), _as_float_array(z2)
        inside = (z1 > 0.0) & (z1 < 1.0) & (z2 > 0.0) & (z2 < 1.0)
        logv = (
            math.log(self.a1 * self.a2)
            + (self.a1 - 1.0) * _safe_log(z1)
            + (self.a2 - 1.0) * _safe_log(z2)
        )
        return np.where(inside, logv, -np.inf)

    def marginal_density(self, component, s):
        a = self.a1 if component == 1 else self.a2
        s = _as_float_array(s)
        inside = (s > 0.0) & (s < 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = a * np.power(np.clip(s, 1e-308, None), a - 1.0)
        return np.where(inside, val, 0.0)

    def marginal_geometry(self, component):
        return (0.0, 1.0), (0.0, 1.0)

    def mass_window(self):
        return (0.0, 1.0), (0.0, 1.0)

    def sample_standardized(self, n, rng):
        u = rng.random((n, 2))
        return u[:, 0] ** (1.0 / self.a1), u[:, 1] ** (1.0 / self.a2)

    def _cond_geometry(self, target, v):
        if v <= 0.0:
            return (0.0, 1.0), (0.0, 1.0), False
        hi = min(1.0, 1.0 / v) if target == SMALLER else min(1.0, v)
        return (0.0, hi), (0.0, hi), True


class IndepGamma(BivariateModel):
    """Independent gamma pair with known shapes and unit standardized rate."""

    name = "indep_gamma"
    mode = SCALE
    support_desc = "positive quadrant"

    def __init__(self, a1: float, a2: float):
        if a1 <= 0 or a2 <= 0:
            raise ConfigurationError("shape parameters a1, a2 must be positive")
        self.a1 = float(a1)
        self.a2 = float(a2)
        self._lognorm = sps.gammaln(a1) + sps.gammaln(a2)

    @property
    def hyper(self):
        return {"a1": self.a1, "a2": self.a2}

    def joint_density(self, z1, z2):
        with np.errstate(over="ignore"):
            logv = self.joint_log_density(z1, z2)
        return np.where(np.isfinite(logv), np.exp(np.minimum(logv, 700.0)), 0.0)

    def joint_log_density(self, z1, z2):
        z1, z2 = _as_float_array(z1), _as_float_array(z2)
        inside = (z1 > 0.0) & (z2 > 0.0)
        logv = (
            (self.a1 - 1.0) * _safe_log(z1)
            + (self.a2 - 1.0) * _safe_log(z2)
            - np.clip(z1, 0.0, None)
            - np.clip(z2, 0.0, None)
            - self._lognorm
        )
        return np.where(inside, logv, -np.inf)

    def marginal_density(self, component, s):
        a = self.a1 if component == 1 else self.a2
        s = _as_float_array(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            logv = (a - 1.0) * np.log(np.clip(s, 1e-308, None)) - np.clip(s, 0.0, None) - sps.gammaln(a)
        return np.where(s > 0.0, np.exp(logv), 0.0)

    def _gamma_hi(self, shape, rate, tail=1e-13):
        return float(sps.gammaincinv(shape, 1.0 - tail)) / rate

    def marginal_geometry(self, component):
        a = self.a1 if component == 1 else self.a2
        return (0.0, math.inf), (0.0, self._gamma_hi(a, 1.0))

    def mass_window(self):
        return (
            (0.0, self._gamma_hi(self.a1, 1.0, 1e-10)),
            (0.0, self._gamma_hi(self.a2, 1.0, 1e-10)),
        )

    def sample_standardized(self, n, rng):
        return rng.gamma(self.a1, 1.0, size=n), rng.gamma(self.a2, 1.0, size=n)

    def _cond_geometry(self, target, v):
        if v <= 0.0:
            return (0.0, math.inf), (0.0, 1.0), False
        # conditional kernel is gamma-shaped: shape a1 + a2, rate 1 + v
        # (pivot on component 1) or 1 + 1/v (pivot on component 2)
        rate = 1.0 + v if target == SMALLER else 1.0 + 1.0 / v
        return (0.0, math.inf), (0.0, self._gamma_hi(self.a1 + self.a2 + 2.0, rate)), True


# ===========================================================================
#  Construction and generic density operations
# ===========================================================================

_MODEL_CLASSES = {
    "bvn": BivariateNormal,
    "dep_exp_gamma": WedgeExpGamma,
    "indep_exp": IndepExponential,
    "cheriyan_gamma": CheriyanGamma,
    "power_uniform": PowerUniform,
    "indep_gamma": IndepGamma,
}


def make_model(name: str, **hyper) -> BivariateModel:
    """Build a catalog model from its name and hyperparameter map."""
    try:
        cls = _MODEL_CLASSES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown model {name!r}; choose one of {', '.join(MODEL_NAMES)}"
        ) from None
    try:
        return cls(**hyper)
    except TypeError as exc:
        raise ConfigurationError(f"bad hyperparameters for {name!r}: {exc}") from None


def conditional_density(model: BivariateModel, target: str, s, t: float):
    """Normalized conditional density of the pivot given the ancillary = t.

    The conditioning value is taken at face value (callers fold the gap in
    themselves). Raises ``DegenerateConditionalError`` when the normalizer
    is zero or non-finite.
    """
    kern = model.cond_kernel(target, t)
    if not kern.proper:
        raise DegenerateConditionalError(t, "conditioning value outside the ancillary support")
    rule = _quad.build_kernel_rule(
        kern.fn, kern.support, kern.window, rel_tol=1e-11, tail_cutoff=1e-14
    )
    norm = rule.total
    if not np.isfinite(norm) or norm <= 0.0:
        raise DegenerateConditionalError(t, f"normalizer = {norm}")
    return np.asarray(kern.fn(_as_float_array(s)), dtype=float) / norm


def joint_cell_probability(model: BivariateModel, x_lo, x_hi, y_lo, y_hi, order=32):
    """Probability mass of the rectangle [x_lo, x_hi] x [y_lo, y_hi].

    Nested Gauss-Legendre quadrature of the standardized joint density.
    Models whose density has a ridge or support edge on the diagonal are
    integrated in two smooth pieces split at z2 = z1.
    """
    x, wx = np.polynomial.legendre.leggauss(order)
    xm, xh = 0.5 * (x_lo + x_hi), 0.5 * (x_hi - x_lo)
    xs = xm + xh * x
    wxs = xh * wx
    total = 0.0
    for xi, wi in zip(xs, wxs):
        if model.kink_on_diagonal and y_lo < xi < y_hi:
            segments = [(y_lo, xi), (xi, y_hi)]
        else:
            segments = [(y_lo, y_hi)]
        for a, b in segments:
            ym, yh = 0.5 * (a + b), 0.5 * (b - a)
            ys = ym + yh * x
            total += wi * yh * float(wx @ model.joint_density(np.full_like(ys, xi), ys))
    return total


# ===========================================================================
#  Closed-form conditional minimizers and envelopes
# ===========================================================================


def _require_gap_domain(mode: str, lam: float):
    if mode == LOCATION and lam < 0.0:
        raise DomainError("location gaps must satisfy lam >= 0")
    if mode == SCALE and lam < 1.0:
        raise DomainError("scale gaps must satisfy lam >= 1")


def _psi_bvn(model: BivariateNormal, target, lam, t):
    slope = model.slope_smaller if target == SMALLER else model.slope_larger
    return slope * (np.asarray(t, dtype=float) - lam)


def _log_ratio_wedge(u):
    # log of 4(2+u)/(1+u); defined for u > -1
    u = np.asarray(u, dtype=float)
    return np.log(4.0 * (2.0 + u) / (1.0 + u))


def _psi_dep_exp(model, target, lam, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < lam):
        raise DomainError(
            "the ancillary difference exceeds the gap almost surely; "
            "t < lam is outside the formula's domain"
        )
    u = t - lam
    if target == SMALLER:
        return _log_ratio_wedge(u)
    return u + _log_ratio_wedge(u)


def _psi_indep_exp(model: IndepExponential, target, lam, t):
    t = np.asarray(t, dtype=float)
    c = model.s1 * model.s2 / (model.s1 + model.s2)
    if target == SMALLER:
        return np.maximum(0.0, lam - t) + c
    return np.maximum(0.0, t - lam) + c


def _psi_cheriyan(model, target, lam, t):
    # Moment ratios of the conditional kernel reduce to
    #   scale * (1 - q^3) / (3 (1 - q^4))
    # with q = y/(1+y) (scale y for the pivot-1 branch y >= 1, scale 1 for
    # the pivot-2 branch y > 1) and q = 1/(1+y) otherwise (scale 1, resp.
    # 1/y). Computed via expm1/log1p to keep 1 - q^k accurate for extreme y.
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("the ancillary ratio must be positive")
    y = t / lam
    hi = y >= 1.0
    with np.errstate(divide="ignore", over="ignore"):
        log_q = np.where(hi, -np.log1p(1.0 / y), -np.log1p(y))
        ratio = np.expm1(3.0 * log_q) / (3.0 * np.expm1(4.0 * log_q))
        if target == SMALLER:
            scale = np.where(hi, y, 1.0)
        else:
            scale = np.where(hi, 1.0, 1.0 / y)
    return scale * ratio


def _psi_power_uniform(model: PowerUniform, target, lam, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("the ancillary ratio must be positive")
    kappa = (model.a1 + model.a2 + 2.0) / (model.a1 + model.a2 + 1.0)
    if target == SMALLER:
        return kappa * np.maximum(1.0, t / lam)
    return kappa * np.maximum(1.0, lam / t)


def _psi_indep_gamma(model: IndepGamma, target, lam, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("the ancillary ratio must be positive")
    k = model.a1 + model.a2 + 1.0
    if target == SMALLER:
        return (1.0 + t / lam) / k
    return (1.0 + lam / t) / k


_PSI_FORMS = {
    ("bvn", "squared_error"): _psi_bvn,
    ("dep_exp_gamma", "linex"): _psi_dep_exp,
    ("indep_exp", "squared_error"): _psi_indep_exp,
    ("cheriyan_gamma", "squared_error"): _psi_cheriyan,
    ("power_uniform", "squared_error"): _psi_power_uniform,
    ("indep_gamma", "squared_error"): _psi_indep_gamma,
}


def has_closed_form(model: BivariateModel, loss: LossSpec, target: str) -> bool:
    return (model.name, loss.name) in _PSI_FORMS


def closed_form_psi(model, loss: LossSpec, target: str, lam: float, t):
    """Catalogued closed form of the conditional minimizer, if any.

    Returns ``None`` when the (model, loss, target) triple has no catalog
    entry, in which case the generic solver applies. Raises ``DomainError``
    for gaps or ancillary values outside the formula's validity range.
    """
    _check_target(target)
    form = _PSI_FORMS.get((model.name, loss.name))
    if form is None:
        return None
    _require_gap_domain(model.mode, lam)
    out = form(model, target, float(lam), t)
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


def closed_form_bounds(model, loss: LossSpec, target: str, t):
    """Catalogued envelope pair (lower, upper) at ancillary value t.

    Either side may be infinite. Returns ``None`` when no closed form is
    catalogued.
    """
    _check_target(target)
    if not has_closed_form(model, loss, target):
        return None
    name = model.name
    t_arr = np.asarray(t, dtype=float)

    if name == "bvn":
        slope = model.slope_smaller if target == SMALLER else model.slope_larger
        edge = slope * t_arr
        if slope < 0.0:
            lower, upper = edge, np.full_like(edge, np.inf)
        elif slope > 0.0:
            lower, upper = np.full_like(edge, -np.inf), edge
        else:
            lower, upper = np.zeros_like(edge), np.zeros_like(edge)
    elif name == "dep_exp_gamma":
        if np.any(t_arr <= 0.0):
            raise DomainError("the ancillary difference is positive almost surely")
        if target == SMALLER:
            lower, upper = _log_ratio_wedge(t_arr), np.full_like(t_arr, math.log(8.0))
        else:
            lower = np.full_like(t_arr, math.log(8.0))
            upper = t_arr + _log_ratio_wedge(t_arr)
    elif name == "indep_exp":
        c = model.s1 * model.s2 / (model.s1 + model.s2)
        if target == SMALLER:
            lower = np.maximum(0.0, -t_arr) + c
            upper = np.full_like(t_arr, np.inf)
        else:
            lower = np.full_like(t_arr, c)
            upper = c + np.maximum(0.0, t_arr)
    elif name == "cheriyan_gamma":
        if target == SMALLER:
            lower = np.full_like(t_arr, 0.25)
            upper = np.asarray(_psi_cheriyan(model, SMALLER, 1.0, t_arr))
        else:
            lower = np.asarray(_psi_cheriyan(model, LARGER, 1.0, t_arr))
            upper = np.full_like(t_arr, np.inf)
    elif name == "power_uniform":
        kappa = (model.a1 + model.a2 + 2.0) / (model.a1 + model.a2 + 1.0)
        if target == SMALLER:
            lower = np.full_like(t_arr, kappa)
            upper = kappa * np.maximum(1.0, t_arr)
        else:
            lower = kappa * np.maximum(1.0, 1.0 / t_arr)
            upper = np.full_like(t_arr, np.inf)
    elif name == "indep_gamma":
        k = model.a1 + model.a2 + 1.0
        if target == SMALLER:
            lower = np.full_like(t_arr, 1.0 / k)
            upper = (1.0 + t_arr) / k
        else:
            lower = (1.0 + 1.0 / t_arr) / k
            upper = np.full_like(t_arr, np.inf)
    else:  # pragma: no cover
        return None

    if np.isscalar(t) or np.ndim(t) == 0:
        return float(lower), float(upper)
    return lower, upper
