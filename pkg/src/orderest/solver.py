"""Generic conditional-risk machinery.

For a model, loss, and target this module solves the first-order equation
of the conditional risk for the optimal shift (location) or multiplier
(scale) at a given gap and ancillary value, builds the per-ancillary
envelope of those optima over all admissible gaps, and classifies the
likelihood-ratio monotonicity that predicts how the optimum moves with the
gap.

The optimum is the root of

    G(c) = integral of W'(s - c) against the conditional kernel (location)
    G(c) = integral of s W'(c s) against the conditional kernel (scale)

where the kernel may stay unnormalized because the normalizer cancels at
the root. The derivative condition on the loss makes G monotone in c, so
the root is found by geometric bracket expansion followed by bisection.
Each solve freezes one quadrature rule (probing the integrand at the
bracket ends) and re-weights its cached kernel values per trial c; the
result is verified against a once-refined rule and the solve is repeated
at a finer resolution if the two disagree.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from . import _quad
from .errors import (
    ConfigurationError,
    DegenerateConditionalError,
    DomainError,
    InconsistentMonotonicityError,
    NoSignChangeError,
)
from .families import LARGER, SMALLER, BivariateModel, closed_form_bounds
from .losses import LOCATION, SCALE, LossSpec

NONDECREASING = "nondecreasing"
NONINCREASING = "nonincreasing"
NONE = "none"


@dataclasses.dataclass(frozen=True)
class SolverOptions:
    """Numerical knobs for the conditional-risk solver.

    ``lambda_grid`` overrides the default envelope grid; when ``None`` the
    grid is log-spaced with ``lambda_grid_points`` points up to
    ``lambda_grid_max`` (starting at the identity gap), compressed toward
    any finite gap boundary the model imposes.
    """

    abs_tol: float = 1e-10
    quad_rel_tol: float = 1e-9
    bracket_init: float = 1.0
    bracket_max_expansions: int = 60
    lambda_grid: Optional[tuple] = None
    tail_cutoff: float = 1e-12
    lambda_grid_max: float = 1e3
    lambda_grid_points: int = 64
    max_panels: int = 512
    divergence_threshold: float = 1e6

    def __post_init__(self):
        for field in ("abs_tol", "quad_rel_tol", "bracket_init", "tail_cutoff",
                      "lambda_grid_max", "divergence_threshold"):
            if getattr(self, field) <= 0:
                raise ConfigurationError(f"{field} must be strictly positive")
        if self.bracket_max_expansions < 1 or self.lambda_grid_points < 4:
            raise ConfigurationError("expansion and grid-point counts are too small")
        if self.lambda_grid is not None:
            g = tuple(float(x) for x in self.lambda_grid)
            if not g or any(b < a for a, b in zip(g, g[1:])):
                raise ConfigurationError("lambda_grid must be nonempty and sorted")
            object.__setattr__(self, "lambda_grid", g)


DEFAULT_OPTIONS = SolverOptions()


@dataclasses.dataclass(frozen=True)
class PsiBounds:
    """Envelope functions for the per-ancillary optimum.

    ``lower`` and ``upper`` are vectorized callables of the ancillary value;
    either may return infinities. ``provenance`` records whether they came
    from the closed-form catalog or from a gap-grid approximation (in which
    case ``lambda_grid`` holds the grid used at the first evaluated point).
    """

    lower: Callable
    upper: Callable
    provenance: str
    lambda_grid: Optional[tuple] = None

    def at(self, t: float) -> tuple:
        return float(np.asarray(self.lower(t))), float(np.asarray(self.upper(t)))


# ---------------------------------------------------------------------------
#  First-order equation
# ---------------------------------------------------------------------------


def _check_compatible(model: BivariateModel, loss: LossSpec):
    if loss.kind != model.mode:
        raise ConfigurationError(
            f"loss kind {loss.kind!r} does not match model mode {model.mode!r}"
        )


def _gap_domain_check(mode: str, lam: float):
    if mode == LOCATION and lam < 0.0:
        raise DomainError("location gaps must satisfy lam >= 0")
    if mode == SCALE and lam < 1.0:
        raise DomainError("scale gaps must satisfy lam >= 1")


def _cond_value(mode: str, target: str, lam: float, t: float) -> float:
    if mode == LOCATION:
        return t - lam
    if t <= 0.0:
        raise DomainError("the ancillary ratio must be positive")
    return t / lam


def _weight_factory(mode: str, loss: LossSpec):
    if mode == LOCATION:
        return lambda c: (lambda s: loss.w_prime(s - c))
    return lambda c: (lambda s: s * loss.w_prime(c * s))


class _RootProblem:
    """Bracket-and-bisect on a frozen quadrature rule."""

    def __init__(self, model, loss, target, v, opts):
        self.model = model
        self.loss = loss
        self.target = target
        self.v = v
        self.opts = opts
        self.kern = model.cond_kernel(target, v)
        if not self.kern.proper:
            raise DegenerateConditionalError(
                v, "conditioning value outside the ancillary support"
            )
        self.weight_at = _weight_factory(model.mode, loss)
        # G is nonincreasing in c for location losses, nondecreasing for scale
        self.increasing = model.mode == SCALE

    def build_rule(self, probe_cs, rel_tol=None):
        probes = [self.weight_at(c) for c in probe_cs]
        return _quad.build_kernel_rule(
            self.kern.fn,
            self.kern.support,
            self.kern.window,
            probes=probes,
            rel_tol=rel_tol if rel_tol is not None else self.opts.quad_rel_tol,
            tail_cutoff=self.opts.tail_cutoff,
            max_panels=self.opts.max_panels,
        )

    def g_on(self, rule, c):
        return rule.weighted(self.weight_at(c))

    def initial_interval(self):
        if self.model.mode == LOCATION:
            h = self.opts.bracket_init
            return -h, h
        h = max(self.opts.bracket_init, 1.0)
        return 1.0 / (1.0 + h), 1.0 + h

    def expand_bracket(self, rule, lo, hi):
        """Grow [lo, hi] geometrically until G changes sign across it."""
        sign = 1.0 if self.increasing else -1.0
        g_lo = sign * self.g_on(rule, lo)
        g_hi = sign * self.g_on(rule, hi)
        expansions = 0
        while g_lo > 0.0 or g_hi < 0.0:
            if expansions >= self.opts.bracket_max_expansions:
                raise NoSignChangeError(
                    "no sign change found for the first-order equation; the "
                    "model/loss pair violates the root-uniqueness assumptions"
                )
            expansions += 1
            if g_lo > 0.0:
                width = hi - lo
                lo = lo - width if self.model.mode == LOCATION else lo / 2.0
                g_lo = sign * self.g_on(rule, lo)
            if g_hi < 0.0:
                width = hi - lo
                hi = hi + width
                g_hi = sign * self.g_on(rule, hi)
        return lo, hi, g_lo, g_hi

    def bisect(self, rule, lo, hi):
        sign = 1.0 if self.increasing else -1.0
        while hi - lo > self.opts.abs_tol:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            g = sign * self.g_on(rule, mid)
            if g == 0.0:
                return self._zero_plateau_midpoint(rule, lo, mid, hi)
            if g < 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def _zero_plateau_midpoint(self, rule, lo, mid, hi):
        # An almost-everywhere flat loss derivative can make G vanish on an
        # interval; report the midpoint of the maximal zero plateau.
        a, b = lo, mid
        while b - a > self.opts.abs_tol:
            m = 0.5 * (a + b)
            if self.g_on(rule, m) == 0.0:
                b = m
            else:
                a = m
        left = 0.5 * (a + b)
        a, b = mid, hi
        while b - a > self.opts.abs_tol:
            m = 0.5 * (a + b)
            if self.g_on(rule, m) == 0.0:
                a = m
            else:
                b = m
        right = 0.5 * (a + b)
        return 0.5 * (left + right)

    def solve(self):
        lo, hi = self.initial_interval()
        rule = None
        for _ in range(self.opts.bracket_max_expansions):
            rule = self.build_rule((lo, hi))
            blo, bhi, _, _ = self.expand_bracket(rule, lo, hi)
            if blo >= lo and bhi <= hi:
                lo, hi = blo, bhi
                break
            # the bracket escaped the probed range; rebuild the rule with
            # probes at the new endpoints so the frozen nodes stay adequate
            lo, hi = blo, bhi
        root = self.bisect(rule, lo, hi)

        # verification pass on a once-refined rule
        fine = _quad.refined_rule(rule, self.kern.fn)
        pad = 64.0 * self.opts.abs_tol
        v_lo, v_hi = root - pad, root + pad
        if self.model.mode == SCALE:
            v_lo = max(v_lo, 0.5 * root)
        try:
            v_lo, v_hi, _, _ = self.expand_bracket(fine, v_lo, v_hi)
            root_fine = self.bisect(fine, v_lo, v_hi)
        except NoSignChangeError:
            root_fine = root + 100.0 * pad  # force the retry below
        if abs(root_fine - root) <= 8.0 * self.opts.abs_tol:
            return root_fine
        # quadrature resolution was inadequate; rebuild around the root at a
        # tighter tolerance and re-solve once
        rule = self.build_rule((root_fine - pad, root_fine, root_fine + pad),
                               rel_tol=0.01 * self.opts.quad_rel_tol)
        lo, hi, _, _ = self.expand_bracket(rule, *self.initial_interval())
        return self.bisect(rule, lo, hi)


def solve_psi_lambda(
    model: BivariateModel,
    loss: LossSpec,
    target: str,
    lam: float,
    t: float,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> float:
    """Optimal equivariant shift/multiplier at gap ``lam``, ancillary ``t``.

    Root of the conditional first-order equation; unique under the
    root-uniqueness assumptions the catalog models satisfy. Raises
    ``DegenerateConditionalError`` when the conditional is improper at this
    gap, ``DivergenceError`` when a required moment integral diverges, and
    ``NoSignChangeError`` when no root can be bracketed.
    """
    _check_compatible(model, loss)
    _gap_domain_check(model.mode, lam)
    v = _cond_value(model.mode, target, float(lam), float(t))
    return _RootProblem(model, loss, target, v, opts).solve()


# ---------------------------------------------------------------------------
#  Likelihood-ratio monotonicity
# ---------------------------------------------------------------------------


def check_lr_monotonicity(
    model: BivariateModel, target: str, lam: float, t: float, s_grid
) -> str:
    """Direction of the gap-shifted to baseline density ratio in s.

    The ratio compares the conditional kernel at gap ``lam`` against the
    gap-free kernel on ``s_grid``. Points where only the numerator is
    positive count as infinite ratio values and points where only the
    denominator is positive count as zero; both-zero points are dropped.
    Ties (a constant ratio) are classified as nondecreasing.
    """
    _gap_domain_check(model.mode, lam)
    s = np.asarray(sorted(float(x) for x in s_grid), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if model.mode == LOCATION:
            if target == SMALLER:
                ln_num = model.joint_log_density(s, s + t - lam)
                ln_den = model.joint_log_density(s, s + t)
            else:
                ln_num = model.joint_log_density(s - t + lam, s)
                ln_den = model.joint_log_density(s - t, s)
        else:
            if t <= 0.0:
                raise DomainError("the ancillary ratio must be positive")
            if target == SMALLER:
                ln_num = model.joint_log_density(s, s * t / lam)
                ln_den = model.joint_log_density(s, s * t)
            else:
                ln_num = model.joint_log_density(s * lam / t, s)
                ln_den = model.joint_log_density(s / t, s)

    if int(np.count_nonzero(np.isfinite(ln_den))) < 2:
        raise DomainError(
            "fewer than 2 grid points have positive baseline density; "
            "enlarge or move the s grid"
        )
    # classify on the log scale; points where only one side vanishes count
    # as infinitely small/large ratio values and both-zero points are dropped
    keep = np.isfinite(ln_num) | np.isfinite(ln_den)
    r = (ln_num - ln_den)[keep]

    finite = r[np.isfinite(r)]
    slack = 1e-12 * max(1.0, float(np.max(np.abs(finite))) if finite.size else 1.0)
    r1, r2 = r[:-1], r[1:]
    nondec = bool(np.all(r2 >= r1 - slack))
    noninc = bool(np.all(r2 <= r1 + slack))
    if nondec:
        return NONDECREASING
    if noninc:
        return NONINCREASING
    return NONE


def psi_direction_from_lr(mode: str, lr_direction: str) -> str:
    """Map a likelihood-ratio direction to the optimum's direction in the gap.

    For location targets the optimum moves with the ratio; for scale targets
    a stochastically larger pivot shrinks the optimal multiplier, so the
    direction flips.
    """
    if lr_direction == NONE:
        return NONE
    if mode == LOCATION:
        return lr_direction
    return NONINCREASING if lr_direction == NONDECREASING else NONDECREASING


def predicted_psi_direction(
    model: BivariateModel, target: str, lam: float, t: float, s_grid
) -> str:
    return psi_direction_from_lr(
        model.mode, check_lr_monotonicity(model, target, lam, t, s_grid)
    )


def lr_probe_grid(model: BivariateModel, target: str, lam: float, t: float, points: int = 201):
    """A pivot grid wide enough to classify the likelihood ratio.

    Spans the union of the conditional windows at the probed gap and at the
    identity gap: the regions where only one of the two kernels is positive
    carry the ratio's extreme values, so a grid covering just one window can
    misread the direction.
    """
    identity = 0.0 if model.mode == LOCATION else 1.0
    k_probe = model.cond_kernel(target, _cond_value(model.mode, target, lam, t))
    k_base = model.cond_kernel(target, _cond_value(model.mode, target, identity, t))
    lo = min(k_probe.window[0], k_base.window[0])
    hi = max(k_probe.window[1], k_base.window[1])
    return np.linspace(lo, hi, points)[1:-1]


# ---------------------------------------------------------------------------
#  Envelopes
# ---------------------------------------------------------------------------


def resolve_lambda_grid(
    model: BivariateModel, target: str, t: float, opts: SolverOptions = DEFAULT_OPTIONS
):
    """Gap grid for envelope computation at ancillary value ``t``.

    Log-spaced from the identity gap up to ``lambda_grid_max``; when the
    model bounds admissible gaps at this ancillary (finite open boundary),
    the grid instead accumulates geometrically toward that boundary.
    """
    lam_lo = 0.0 if model.mode == LOCATION else 1.0
    sup = model.lambda_sup(target, t)
    if opts.lambda_grid is not None:
        grid = np.asarray(opts.lambda_grid, dtype=float)
        if np.any(grid < lam_lo):
            raise DomainError("lambda_grid extends below the identity gap")
        grid = grid[grid < sup]
        if grid.size == 0:
            raise DomainError("lambda_grid has no admissible points at this ancillary")
        return grid
    n = opts.lambda_grid_points
    if math.isinf(sup):
        hi = opts.lambda_grid_max
        if model.mode == LOCATION:
            return np.concatenate([[0.0], np.geomspace(1e-3, hi, n - 1)])
        return np.geomspace(1.0, hi, n)
    # finite open boundary: approach it geometrically from the identity gap
    span = sup - lam_lo
    if span <= 0.0:
        raise DegenerateConditionalError(t, "no admissible gap at this ancillary")
    fractions = 1.0 - np.geomspace(1e-8, 1.0, n - 1)
    grid = lam_lo + span * np.concatenate([[0.0], np.sort(fractions)])
    return np.unique(grid)


def _extrapolate_open_end(lams, psis, opts):
    """Limit estimate at the open end of a monotone sample.

    Fits psi = a + b/lam on the trailing points; when two overlapping fits
    agree the common intercept is returned, otherwise the sequence is still
    moving and the limit cannot be certified finite (None).
    """
    if abs(psis[-1]) > opts.divergence_threshold:
        return None
    l3, l2, l1 = lams[-3], lams[-2], lams[-1]
    p3, p2, p1 = psis[-3], psis[-2], psis[-1]
    scale = max(1.0, abs(p1))
    if abs(p1 - p3) <= 1e-9 * scale:
        return p1  # already flat
    def intercept(la, pa, lb, pb):
        inv_a, inv_b = 1.0 / la, 1.0 / lb
        if inv_a == inv_b:
            return pb
        b = (pb - pa) / (inv_b - inv_a)
        return pb - b * inv_b
    a_last = intercept(l2, p2, l1, p1)
    a_prev = intercept(l3, p3, l1, p1)
    if abs(a_last - a_prev) <= max(1e-7, 1e-5 * abs(a_last)):
        return a_last
    return None


def compute_bounds(
    model: BivariateModel,
    loss: LossSpec,
    target: str,
    t: float,
    opts: SolverOptions = DEFAULT_OPTIONS,
    *,
    force_grid: bool = False,
) -> tuple:
    """Envelope (lower, upper, provenance) of the optimum at ancillary ``t``.

    Closed-form catalog entries are returned directly. Otherwise the
    optimum is sampled over a gap grid, its monotonicity is checked against
    the likelihood-ratio prediction (disagreement raises
    ``InconsistentMonotonicityError``), and the open-end limit is
    extrapolated; an end that is still moving or beyond the divergence
    threshold is reported as infinite, which only widens the envelope and
    keeps clipping safe.
    """
    _check_compatible(model, loss)
    if not force_grid:
        cb = closed_form_bounds(model, loss, target, float(t))
        if cb is not None:
            return cb[0], cb[1], "closed_form"

    lams = np.asarray(resolve_lambda_grid(model, target, t, opts), dtype=float)
    psis = np.array([solve_psi_lambda(model, loss, target, lam, t, opts) for lam in lams])

    # predicted direction from the likelihood ratio at a few nontrivial gaps
    probe_lams = [lam for lam in (lams[len(lams) // 2], lams[-1]) if lam > lams[0]]
    directions = {
        predicted_psi_direction(model, target, lam, t, lr_probe_grid(model, target, lam, t))
        for lam in probe_lams
    }
    direction = directions.pop() if len(directions) == 1 else NONE

    scale = max(1.0, float(np.max(np.abs(psis))))
    diffs = np.diff(psis)
    if direction == NONDECREASING and np.any(diffs < -1e-9 * scale):
        raise InconsistentMonotonicityError(
            "sampled optima decrease although the likelihood ratio predicts "
            "a nondecreasing trend; check the density implementation"
        )
    if direction == NONINCREASING and np.any(diffs > 1e-9 * scale):
        raise InconsistentMonotonicityError(
            "sampled optima increase although the likelihood ratio predicts "
            "a nonincreasing trend; check the density implementation"
        )

    bounded_sup = math.isfinite(model.lambda_sup(target, t))
    if direction == NONE:
        lower, upper = float(np.min(psis)), float(np.max(psis))
    else:
        increasing = direction == NONDECREASING
        closed_end = float(psis[0])
        if bounded_sup:
            open_end = float(psis[-1])  # grid accumulates at the boundary
        else:
            ext = _extrapolate_open_end(lams, psis, opts)
            open_end = float(ext) if ext is not None else (math.inf if increasing else -math.inf)
        lower, upper = (closed_end, open_end) if increasing else (open_end, closed_end)
    return lower, upper, "grid_approximate"


def make_psi_bounds(
    model: BivariateModel,
    loss: LossSpec,
    target: str,
    opts: SolverOptions = DEFAULT_OPTIONS,
    *,
    force_grid: bool = False,
) -> PsiBounds:
    """Envelope functions of the ancillary, closed-form where catalogued."""
    _check_compatible(model, loss)
    if not force_grid:
        probe = closed_form_bounds(model, loss, target, 1.0 if model.mode == SCALE else 0.5)
        if probe is not None:
            lower = lambda t: np.asarray(closed_form_bounds(model, loss, target, t)[0])
            upper = lambda t: np.asarray(closed_form_bounds(model, loss, target, t)[1])
            return PsiBounds(lower=lower, upper=upper, provenance="closed_form")

    cache: dict = {}

    def _at(t):
        key = float(t)
        if key not in cache:
            lo, hi, _ = compute_bounds(model, loss, target, key, opts, force_grid=True)
            cache[key] = (lo, hi)
        return cache[key]

    def lower(t):
        return np.array([_at(x)[0] for x in np.atleast_1d(np.asarray(t, dtype=float))]).reshape(np.shape(t))

    def upper(t):
        return np.array([_at(x)[1] for x in np.atleast_1d(np.asarray(t, dtype=float))]).reshape(np.shape(t))

    grid = tuple(float(x) for x in np.atleast_1d(resolve_lambda_grid(model, target, 1.0 if model.mode == SCALE else 0.5, opts)))
    return PsiBounds(lower=lower, upper=upper, provenance="grid_approximate", lambda_grid=grid)


# ---------------------------------------------------------------------------
#  Unrestricted best equivariant constant
# ---------------------------------------------------------------------------


def solve_equivariant_constant(
    model: BivariateModel,
    loss: LossSpec,
    target: str,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> float:
    """Best unrestricted equivariant shift/multiplier for one component.

    Solves the marginal first-order equation. Raises ``DivergenceError``
    when the defining moment integral diverges (then no best equivariant
    estimator exists for this component).
    """
    _check_compatible(model, loss)
    component = 1 if target == SMALLER else 2
    support, window = model.marginal_geometry(component)
    kernel = lambda s: model.marginal_density(component, s)
    weight_at = _weight_factory(model.mode, loss)

    if model.mode == LOCATION:
        lo, hi = -opts.bracket_init, opts.bracket_init
    else:
        lo, hi = 1.0 / (1.0 + opts.bracket_init), 1.0 + opts.bracket_init
    increasing = model.mode == SCALE
    sign = 1.0 if increasing else -1.0

    def build(probe_cs):
        return _quad.build_kernel_rule(
            kernel, support, window,
            probes=[weight_at(c) for c in probe_cs],
            rel_tol=opts.quad_rel_tol, tail_cutoff=opts.tail_cutoff,
            max_panels=opts.max_panels,
        )

    rule = build((lo, hi))
    g = lambda c: sign * rule.weighted(weight_at(c))
    expansions = 0
    g_lo, g_hi = g(lo), g(hi)
    while g_lo > 0.0 or g_hi < 0.0:
        if expansions >= opts.bracket_max_expansions:
            raise NoSignChangeError("no sign change for the marginal first-order equation")
        expansions += 1
        if g_lo > 0.0:
            lo = lo - (hi - lo) if model.mode == LOCATION else lo / 2.0
        if g_hi < 0.0:
            hi = hi + (hi - lo)
        rule = build((lo, hi))
        g_lo, g_hi = g(lo), g(hi)
    while hi - lo > opts.abs_tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
