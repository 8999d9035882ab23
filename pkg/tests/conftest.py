"""Shared fixtures and independent numerical oracles.

The oracles deliberately avoid the package's own quadrature and root
finding: conditional optima are recomputed with scipy's QUADPACK wrapper
and Brent root finding, so agreement between the two paths checks both.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy import integrate, optimize

import orderest as oe
from orderest.losses import LOCATION

# the twelve catalogued (model, loss) pairs; each supports both targets
CATALOG_TRIPLES = (
    ("bvn", {"s1": 1.0, "s2": 2.0, "rho": 0.3}, "squared_error"),
    ("dep_exp_gamma", {}, "linex"),
    ("indep_exp", {"s1": 1.5, "s2": 0.7}, "squared_error"),
    ("cheriyan_gamma", {}, "squared_error"),
    ("power_uniform", {"a1": 1.5, "a2": 2.5}, "squared_error"),
    ("indep_gamma", {"a1": 2.0, "a2": 1.0}, "squared_error"),
)


def catalog_grids(model_name: str):
    """(gap grid, ancillary grid, t_is_offset) for sweep tests.

    For the wedge family the ancillary exceeds the gap almost surely, so
    its ancillary grid is expressed as positive offsets added to the gap.
    """
    if model_name == "bvn":
        return np.linspace(0.0, 8.0, 20), np.linspace(-6.0, 6.0, 20), False
    if model_name == "indep_exp":
        return np.linspace(0.0, 8.0, 20), np.linspace(-5.0, 5.0, 20), False
    if model_name == "dep_exp_gamma":
        return np.linspace(0.0, 5.0, 20), np.linspace(0.05, 6.0, 20), True
    return np.geomspace(1.0, 50.0, 20), np.geomspace(0.05, 20.0, 20), False


def iter_triples():
    for name, hyper, loss_name in CATALOG_TRIPLES:
        model = oe.make_model(name, **hyper)
        loss = oe.make_loss(loss_name, model.mode)
        for target in (oe.SMALLER, oe.LARGER):
            yield model, loss, target


def scipy_psi_oracle(model, loss, target, lam, t):
    """Conditional optimum recomputed with scipy quadrature + Brent.

    Independent of the package's integrator and bisection; shares only the
    density definitions under test elsewhere.
    """
    v = (t - lam) if model.mode == LOCATION else (t / lam)
    kern = model.cond_kernel(target, v)
    assert kern.proper
    lo, hi = kern.window
    span = hi - lo
    hi_ext = hi + 1.5 * span  # headroom for growing loss derivatives
    if np.isfinite(kern.support[1]):
        hi_ext = min(hi_ext, kern.support[1])

    if model.mode == LOCATION:
        def g(c):
            val, _ = integrate.quad(
                lambda s: float(loss.w_prime(s - c) * kern.fn(s)), lo, hi_ext, limit=300
            )
            return val
    else:
        def g(c):
            val, _ = integrate.quad(
                lambda s: float(s * loss.w_prime(c * s) * kern.fn(s)), lo, hi_ext, limit=300
            )
            return val

    if model.mode == LOCATION:
        a, b = -2.0, 2.0
        for _ in range(40):
            if g(a) * g(b) <= 0.0:
                break
            a, b = a - (b - a), b + (b - a)
    else:
        a, b = 1e-8, 4.0
        for _ in range(40):
            if g(a) * g(b) <= 0.0:
                break
            a, b = a / 4.0, b * 4.0
    return optimize.brentq(g, a, b, xtol=1e-12)


def central_difference(fn, x, step=1e-6):
    return (fn(x + step) - fn(x - step)) / (2.0 * step)


@pytest.fixture(scope="session")
def sprinters_report():
    data = oe.load_paired_csv(
        __import__("orderest.analysis", fromlist=["bundled_dataset_path"]).bundled_dataset_path()
    )
    return oe.analyze_paired(data)
