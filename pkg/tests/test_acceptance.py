"""Acceptance suite.

One test per acceptance criterion; each prints a single PASS/FAIL line
(run with ``pytest -s tests/test_acceptance.py`` to see them).
"""

import math
import time

import numpy as np
import pytest

import orderest as oe
from orderest.cli import main as cli_main
from orderest.families import joint_cell_probability
from orderest.risksim import dominance_report
from orderest.solver import NONDECREASING, NONINCREASING

from conftest import CATALOG_TRIPLES, catalog_grids


def _report(num: int, name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    suffix = f" [{detail}]" if detail else ""
    print(f"\n[acceptance] criterion {num} ({name}): {status}{suffix}")
    assert ok, f"criterion {num} ({name}) failed {suffix}"


# ---------------------------------------------------------------------------
#  1. oracle equivalence of solver and closed forms
# ---------------------------------------------------------------------------


def test_criterion_1_oracle_equivalence():
    start = time.monotonic()
    worst = 0.0
    worst_case = None
    for name, hyper, loss_name in CATALOG_TRIPLES:
        model = oe.make_model(name, **hyper)
        loss = oe.make_loss(loss_name, model.mode)
        lams, ts, t_is_offset = catalog_grids(name)
        for target in (oe.SMALLER, oe.LARGER):
            for lam in lams:
                for t_raw in ts:
                    t = lam + t_raw if t_is_offset else t_raw
                    closed = oe.closed_form_psi(model, loss, target, lam, t)
                    solved = oe.solve_psi_lambda(model, loss, target, lam, t)
                    diff = abs(closed - solved)
                    if diff > worst:
                        worst, worst_case = diff, (name, target, lam, t)
    elapsed = time.monotonic() - start
    ok = worst <= 1e-5 and elapsed < 60.0
    _report(
        1,
        "oracle equivalence",
        ok,
        f"max |closed - solver| = {worst:.2e} at {worst_case}, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
#  2. paired-data reproduction
# ---------------------------------------------------------------------------


def test_criterion_2_paired_analysis(sprinters_report):
    start = time.monotonic()
    rep = sprinters_report
    checks = {
        "mean_a": round(rep.mean_a, 3) == 9.617,
        "mean_b": round(rep.mean_b, 3) == 9.488,
        "var_a": round(rep.var_a, 3) == 0.032,
        "var_b": round(rep.var_b, 3) == 0.063,
        "corr": round(rep.correlation, 3) == 0.848,
        "improved_smaller": abs(rep.improved_smaller - 9.66) <= 0.005,
        "improved_larger": abs(rep.improved_larger - 9.66) <= 0.005,
    }
    elapsed = time.monotonic() - start
    failed = [k for k, v in checks.items() if not v]
    ok = not failed and elapsed < 1.0
    _report(2, "paired-data reproduction", ok, f"failed={failed or 'none'}, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
#  3. constant risks
# ---------------------------------------------------------------------------


def test_criterion_3_constant_risks():
    n = 100_000
    worst_z = 0.0

    model = oe.make_model("bvn", s1=0.2, s2=0.4, rho=-0.9)
    loss = oe.make_loss("squared_error", oe.LOCATION)
    blee = oe.catalog_estimator(model, oe.SMALLER, "blee")
    for i, gap in enumerate((0.0, 2.5, 5.0, 7.5, 10.0)):
        r = oe.simulate_risk(model, loss, blee, oe.Theta(0.0, gap), n, 300 + i)
        worst_z = max(worst_z, abs(r.mean_risk - 0.04) / r.std_error)

    gamma = oe.make_model("indep_gamma", a1=1.0, a2=2.0)
    sc = oe.make_loss("squared_error", oe.SCALE)
    bsee = oe.catalog_estimator(gamma, oe.SMALLER, "bsee")
    for i, gap in enumerate((1.0, 3.0, 5.5, 8.0, 10.0)):
        r = oe.simulate_risk(gamma, sc, bsee, oe.Theta(1.0, gap), n, 400 + i)
        worst_z = max(worst_z, abs(r.mean_risk - 0.5) / r.std_error)

    ok = worst_z < 4.0
    _report(3, "constant risks", ok, f"worst |z| = {worst_z:.2f} (< 4)")


# ---------------------------------------------------------------------------
#  4. dominance suite over all figure panels
# ---------------------------------------------------------------------------


def test_criterion_4_dominance_suite():
    start = time.monotonic()
    seed = 2024
    n = 10_000
    problems = []
    # pairs asserted to improve by more than 3 standard errors at the
    # identity gap; the clipped BSEE's gain at the identity gap is genuinely
    # weak for small shape parameters, so strictness there follows the
    # location panels and the restricted-MLE pairs only
    for name in sorted(oe.PRESETS):
        curve = oe.run_preset(name, n=n, seed=seed)
        if name.startswith("fig1"):
            pairs = [("BLEE", "improved BLEE", True)]
        else:
            pairs = [("BSEE", "improved BSEE", False), ("RMLE", "improved RMLE", True)]
        for base, improved, strict in pairs:
            rep = dominance_report(curve, base, improved)
            if rep.violations:
                problems.append(f"{name}:{base}->{improved} violated at {rep.violation_gaps}")
            if strict:
                z0 = -rep.diff[0] / rep.diff_se[0] if rep.diff_se[0] > 0 else math.inf
                if z0 <= 3.0:
                    problems.append(f"{name}:{base}->{improved} identity-gap z={z0:.2f}")
    elapsed = time.monotonic() - start
    ok = not problems and elapsed < 300.0
    _report(4, "dominance suite", ok, f"problems={problems or 'none'}, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
#  5. monotonicity predictions match sampled optima
# ---------------------------------------------------------------------------


def _probe_s_grid(model, target, lam, t):
    v = (t - lam) if model.mode == oe.LOCATION else (t / lam)
    kern = model.cond_kernel(target, v)
    return np.linspace(kern.window[0], kern.window[1], 101)[1:-1]


def test_criterion_5_monotonicity_suite():
    violations = []
    for name, hyper, loss_name in CATALOG_TRIPLES:
        model = oe.make_model(name, **hyper)
        loss = oe.make_loss(loss_name, model.mode)
        lams, _, _ = catalog_grids(name)
        if name == "dep_exp_gamma":
            t_values = (6.5, 9.0)
        elif model.mode == oe.LOCATION:
            t_values = (-2.0, 0.5, 3.0)
        else:
            t_values = (0.5, 2.0, 7.0)
        for target in (oe.SMALLER, oe.LARGER):
            for t in t_values:
                psis = np.array(
                    [oe.closed_form_psi(model, loss, target, lam, t) for lam in lams]
                )
                probe_lams = [lams[len(lams) // 2], lams[-1]]
                preds = {
                    oe.predicted_psi_direction(model, target, lam, t, _probe_s_grid(model, target, lam, t))
                    for lam in probe_lams
                }
                if len(preds) != 1:
                    violations.append(f"{name}:{target} t={t} mixed predictions {preds}")
                    continue
                pred = preds.pop()
                slack = 1e-9 * max(1.0, float(np.max(np.abs(psis))))
                diffs = np.diff(psis)
                if pred == NONDECREASING:
                    bad = bool(np.any(diffs < -slack))
                elif pred == NONINCREASING:
                    bad = bool(np.any(diffs > slack))
                else:
                    bad = True
                if bad:
                    violations.append(f"{name}:{target} t={t} predicted {pred}")
    ok = not violations
    _report(5, "monotonicity suite", ok, f"violations={violations or 'none'}")


# ---------------------------------------------------------------------------
#  6. clipped estimators reproduce the algebraic identities
# ---------------------------------------------------------------------------


def _bvn_blend(s1, s2, rho, x1, x2):
    spread = s1 * s1 + s2 * s2 - 2.0 * rho * s1 * s2
    return (s2 * (s2 - rho * s1) * x1 + s1 * (s1 - rho * s2) * x2) / spread


def _cheriyan_unit_gap_psi(t, target):
    # moment-ratio formula at the identity gap, spelled out per branch
    t = np.asarray(t, dtype=float)
    q_hi = t / (1.0 + t)
    q_lo = 1.0 / (1.0 + t)
    hi_val = (1.0 - q_hi**3) / (3.0 * (1.0 - q_hi**4))
    lo_val = (1.0 - q_lo**3) / (3.0 * (1.0 - q_lo**4))
    if target == oe.SMALLER:
        return np.where(t >= 1.0, t * hi_val, lo_val)
    return np.where(t > 1.0, hi_val, lo_val / t)


def test_criterion_6_algebraic_identities():
    rng = np.random.default_rng(606)
    n = 1000
    xn1, xn2 = rng.normal(0.0, 2.0, n), rng.normal(0.0, 2.0, n)
    xp1 = rng.uniform(0.05, 8.0, n)
    xp2 = rng.uniform(0.05, 8.0, n)
    xw1 = rng.uniform(0.1, 5.0, n)
    xw2 = xw1 + rng.uniform(0.01, 8.0, n)

    failures = []

    def check(tag, model, loss_name, target, base_kind, expected):
        model_loss = oe.make_loss(loss_name, model.mode)
        bounds = oe.make_psi_bounds(model, model_loss, target)
        clipped = oe.clip_improve(oe.catalog_estimator(model, target, base_kind), bounds)
        x1, x2 = (xw1, xw2) if model.name == "dep_exp_gamma" else (
            (xp1, xp2) if model.mode == oe.SCALE else (xn1, xn2)
        )
        got = clipped.evaluate(x1, x2)
        want = expected(x1, x2)
        err = float(np.max(np.abs(got - want)))
        if err > 1e-10:
            failures.append(f"{tag}: max err {err:.2e}")

    # correlated Gaussian pairs, all four regimes
    b1 = oe.make_model("bvn", s1=1.0, s2=2.0, rho=0.3)
    check("gauss smaller low-corr", b1, "squared_error", oe.SMALLER, "blee",
          lambda x1, x2: np.minimum(x1, _bvn_blend(1.0, 2.0, 0.3, x1, x2)))
    check("gauss larger low-corr", b1, "squared_error", oe.LARGER, "blee",
          lambda x1, x2: np.maximum(x2, _bvn_blend(1.0, 2.0, 0.3, x1, x2)))
    b2 = oe.make_model("bvn", s1=0.2, s2=0.4, rho=0.9)
    check("gauss smaller high-corr", b2, "squared_error", oe.SMALLER, "blee",
          lambda x1, x2: np.maximum(x1, _bvn_blend(0.2, 0.4, 0.9, x1, x2)))
    b3 = oe.make_model("bvn", s1=10.0, s2=0.4, rho=0.5)
    check("gauss larger inverted", b3, "squared_error", oe.LARGER, "blee",
          lambda x1, x2: np.minimum(x2, _bvn_blend(10.0, 0.4, 0.5, x1, x2)))

    # wedge-supported pair under the asymmetric loss
    wedge = oe.make_model("dep_exp_gamma")
    check("wedge smaller", wedge, "linex", oe.SMALLER, "blee",
          lambda x1, x2: x1 - np.maximum(
              np.log(4.0 * (2.0 + (x2 - x1)) / (1.0 + (x2 - x1))), math.log(6.0)))

    # independent shifted exponentials
    s1v, s2v = 1.5, 0.7
    c = s1v * s2v / (s1v + s2v)
    ie = oe.make_model("indep_exp", s1=s1v, s2=s2v)
    check("exponential smaller best", ie, "squared_error", oe.SMALLER, "blee",
          lambda x1, x2: np.minimum(x2 - c, x1 - s1v))
    check("exponential smaller mle", ie, "squared_error", oe.SMALLER, "rmle",
          lambda x1, x2: np.minimum(x1, x2) - c)

    def exp_larger_best(x1, x2):
        d = x2 - x1
        threshold = s2v * s2v / (s1v + s2v)
        return np.where(d < 0.0, x2 - c, np.where(d < threshold, x1 - c, x2 - s2v))

    check("exponential larger best", ie, "squared_error", oe.LARGER, "blee", exp_larger_best)
    check("exponential larger mle", ie, "squared_error", oe.LARGER, "rmle",
          lambda x1, x2: x2 - c)

    # dependent gamma pair (shared component)
    ch = oe.make_model("cheriyan_gamma")
    check("shared-gamma smaller", ch, "squared_error", oe.SMALLER, "bsee",
          lambda x1, x2: x1 * np.minimum(1.0 / 3.0, _cheriyan_unit_gap_psi(x2 / x1, oe.SMALLER)))
    check("shared-gamma larger", ch, "squared_error", oe.LARGER, "bsee",
          lambda x1, x2: x2 * np.maximum(_cheriyan_unit_gap_psi(x2 / x1, oe.LARGER), 1.0 / 3.0))

    # independent power-function pair on the unit square
    a1, a2 = 1.5, 2.5
    kappa = (a1 + a2 + 2.0) / (a1 + a2 + 1.0)
    bell1 = (a1 + 2.0) / (a1 + 1.0)
    bell2 = (a2 + 2.0) / (a2 + 1.0)
    threshold = bell1 / kappa
    pu = oe.make_model("power_uniform", a1=a1, a2=a2)

    def power_smaller(x1, x2):
        t = x2 / x1
        psi = np.where(t < 1.0, kappa, np.where(t <= threshold, kappa * t, bell1))
        return x1 * psi

    check("power smaller best", pu, "squared_error", oe.SMALLER, "bsee", power_smaller)
    check("power larger mle", pu, "squared_error", oe.LARGER, "rmle",
          lambda x1, x2: kappa * np.maximum(x1, x2))
    check("power larger best", pu, "squared_error", oe.LARGER, "bsee",
          lambda x1, x2: np.maximum(bell2 * x2, kappa * x1))

    # independent gamma pair
    ga1, ga2 = 2.0, 1.0
    k = ga1 + ga2 + 1.0
    ig = oe.make_model("indep_gamma", a1=ga1, a2=ga2)
    check("gamma smaller best", ig, "squared_error", oe.SMALLER, "bsee",
          lambda x1, x2: np.minimum(x1 / (ga1 + 1.0), (x1 + x2) / k))
    check("gamma smaller mle", ig, "squared_error", oe.SMALLER, "rmle",
          lambda x1, x2: np.minimum(x1 / ga1, (x1 + x2) / k))
    check("gamma larger best", ig, "squared_error", oe.LARGER, "bsee",
          lambda x1, x2: np.maximum(x2 / (ga2 + 1.0), (x1 + x2) / k))

    ok = not failures
    _report(6, "algebraic identities", ok, f"failures={failures or 'none'}")


# ---------------------------------------------------------------------------
#  7. samplers match densities
# ---------------------------------------------------------------------------


SAMPLER_CHECKS = (
    ("bvn", {"s1": 0.2, "s2": 0.4, "rho": -0.9}, (-0.6, 0.6), (-1.2, 1.2)),
    ("dep_exp_gamma", {}, (0.0, 5.0), (0.0, 7.0)),
    ("indep_exp", {"s1": 1.0, "s2": 2.0}, (0.0, 4.0), (0.0, 8.0)),
    ("cheriyan_gamma", {}, (0.0, 6.0), (0.0, 6.0)),
    ("power_uniform", {"a1": 2.0, "a2": 1.5}, (0.0, 1.0), (0.0, 1.0)),
    ("indep_gamma", {"a1": 2.0, "a2": 3.0}, (0.0, 7.0), (0.0, 9.0)),
)


def test_criterion_7_sampler_validation():
    n = 1_000_000
    grid = 8
    worst = {}
    for name, hyper, xr, yr in SAMPLER_CHECKS:
        model = oe.make_model(name, **hyper)
        theta = oe.Theta(0.0, 0.0) if model.mode == oe.LOCATION else oe.Theta(1.0, 1.0)
        draws = model.sample(theta, n, 777)
        xs = np.linspace(xr[0], xr[1], grid + 1)
        ys = np.linspace(yr[0], yr[1], grid + 1)
        counts, _, _ = np.histogram2d(draws[:, 0], draws[:, 1], bins=(xs, ys))
        worst_z = 0.0
        for i in range(grid):
            for j in range(grid):
                p = joint_cell_probability(model, xs[i], xs[i + 1], ys[j], ys[j + 1])
                if n * p < 50.0:
                    continue
                se = math.sqrt(p * (1.0 - p) / n)
                worst_z = max(worst_z, abs(counts[i, j] / n - p) / se)
        worst[name] = worst_z
    ok = all(z <= 5.0 for z in worst.values())
    detail = ", ".join(f"{k}: z={v:.2f}" for k, v in worst.items())
    _report(7, "sampler validation", ok, detail)


# ---------------------------------------------------------------------------
#  8. simulation determinism
# ---------------------------------------------------------------------------


def test_criterion_8_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        rc = cli_main(
            f"simulate --preset fig1a --n 2000 --seed 42 --out-dir {out} --format csv".split()
        )
        assert rc == 0
    same = (out1 / "fig1a.csv").read_bytes() == (out2 / "fig1a.csv").read_bytes()
    _report(8, "determinism", same, "byte-identical CSV" if same else "CSV outputs differ")
