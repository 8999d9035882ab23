"""Adaptive Gauss-Legendre quadrature on panels.

All integrands are evaluated on node arrays (never scalars), which keeps
the conditional-risk solver fast enough to sweep thousands of
(gap, ancillary) pairs. A rule is built once per conditional kernel:
the window is first extended outward in geometrically growing chunks until
every driving integrand has negligible tail mass (this is where divergent
integrals are detected), then panels are bisected adaptively until an
embedded low/high-order error estimate meets the relative tolerance.
The frozen rule exposes the kernel values at its nodes so that root
finding can re-weight them cheaply for every trial shift.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import DivergenceError

GL_LOW = 15
GL_HIGH = 31

_NODE_CACHE: dict = {}


def _leggauss(n: int):
    if n not in _NODE_CACHE:
        _NODE_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _NODE_CACHE[n]


def _panel_nodes(edges_lo, edges_hi, order):
    """Nodes/weights of order-``order`` rules on a batch of panels.

    Returns arrays of shape (npanels, order).
    """
    x, w = _leggauss(order)
    mid = 0.5 * (edges_lo + edges_hi)[:, None]
    half = 0.5 * (edges_hi - edges_lo)[:, None]
    return mid + half * x[None, :], half * w[None, :]


def _chunk_integral(fns, a, b):
    """Single high-order panel estimate of each fn over [a, b]."""
    nodes, weights = _panel_nodes(np.array([a]), np.array([b]), GL_HIGH)
    s = nodes.ravel()
    w = weights.ravel()
    return [float(w @ np.asarray(fn(s), dtype=float)) for fn in fns]


def extend_window(fns, lo, hi, support, tail_cutoff, max_expansions=60):
    """Grow [lo, hi] until the tails of every fn are negligible.

    ``support`` is the open interval on which the integrands live; tails
    are only explored on sides where the support extends beyond the window.
    Chunk widths double each step. Raises ``DivergenceError`` when chunk
    contributions stop shrinking while still significant, or when the
    expansion budget is exhausted with a significant tail remaining.
    """
    a, b = support
    lo = max(lo, a) if np.isfinite(a) else lo
    hi = min(hi, b) if np.isfinite(b) else hi
    if not lo < hi:
        raise ValueError("empty integration window")

    core = _chunk_integral(fns, lo, hi)
    scales = [abs(c) for c in core]

    for side in ("right", "left"):
        open_side = (b == np.inf) if side == "right" else (a == -np.inf)
        if not open_side:
            continue
        width = 0.5 * max(hi - lo, 1.0)
        edge = hi if side == "right" else lo
        prev_mag = None
        grew = 0
        for _ in range(max_expansions):
            if side == "right":
                seg = (edge, edge + width)
            else:
                seg = (edge - width, edge)
            chunk = _chunk_integral(fns, *seg)
            mags = [abs(c) for c in chunk]
            scales = [max(s0, s0 + m) for s0, m in zip(scales, mags)]
            significant = any(
                m > tail_cutoff * max(s0, 1e-300) for m, s0 in zip(mags, scales)
            )
            edge = seg[1] if side == "right" else seg[0]
            if not significant:
                break
            total_mag = sum(mags)
            if prev_mag is not None and total_mag > prev_mag:
                grew += 1
                if grew >= 2:
                    raise DivergenceError(
                        "integral tail keeps growing; the defining moment "
                        "integral appears to diverge"
                    )
            else:
                grew = 0
            prev_mag = total_mag
            width *= 2.0
        else:
            raise DivergenceError(
                "integral tail still significant after exhausting expansions"
            )
        if side == "right":
            hi = edge
        else:
            lo = edge
    return lo, hi


def refine_panels(fns, lo, hi, rel_tol, max_panels=512, initial=8, max_rounds=80):
    """Adaptively bisect panels of [lo, hi] until all fns integrate cleanly.

    The error estimate per panel is |GL31 - GL15|; a panel is split when its
    estimate exceeds an equidistributed share of the global budget for any
    driving integrand. Returns the sorted array of panel edges.
    """
    edges = np.linspace(lo, hi, initial + 1)
    panels = [(edges[i], edges[i + 1]) for i in range(initial)]

    def _eval(batch):
        arr_lo, arr_hi = np.array([p[0] for p in batch]), np.array([p[1] for p in batch])
        n_lo, w_lo = _panel_nodes(arr_lo, arr_hi, GL_LOW)
        n_hi, w_hi = _panel_nodes(arr_lo, arr_hi, GL_HIGH)
        out = []
        for fn in fns:
            f_lo = np.asarray(fn(n_lo.ravel()), dtype=float).reshape(n_lo.shape)
            f_hi = np.asarray(fn(n_hi.ravel()), dtype=float).reshape(n_hi.shape)
            out.append(((w_lo * f_lo).sum(axis=1), (w_hi * f_hi).sum(axis=1)))
        return out

    vals = _eval(panels)
    i_low = [list(v[0]) for v in vals]
    i_high = [list(v[1]) for v in vals]

    for _ in range(max_rounds):
        n = len(panels)
        if n >= max_panels:
            break
        totals = [max(abs(sum(h)), 1e-300) for h in i_high]
        errs = np.zeros(n)
        need_any = False
        for f_idx in range(len(fns)):
            e = np.abs(np.array(i_high[f_idx]) - np.array(i_low[f_idx]))
            if e.sum() > rel_tol * totals[f_idx]:
                need_any = True
            errs = np.maximum(errs, e / totals[f_idx])
        if not need_any:
            break
        budget = rel_tol / (2.0 * n)
        split_idx = [i for i in range(n) if errs[i] > budget]
        if not split_idx:
            split_idx = [int(np.argmax(errs))]
        if n + len(split_idx) > max_panels:
            order = np.argsort(-errs[split_idx])
            split_idx = [split_idx[i] for i in order[: max_panels - n]]
        new_batch = []
        for i in split_idx:
            a, b = panels[i]
            m = 0.5 * (a + b)
            new_batch.extend([(a, m), (m, b)])
        vals = _eval(new_batch)
        keep = [i for i in range(n) if i not in set(split_idx)]
        panels = [panels[i] for i in keep] + new_batch
        for f_idx in range(len(fns)):
            i_low[f_idx] = [i_low[f_idx][i] for i in keep] + list(vals[f_idx][0])
            i_high[f_idx] = [i_high[f_idx][i] for i in keep] + list(vals[f_idx][1])

    edges = np.unique(np.concatenate([[p[0] for p in panels], [p[1] for p in panels]]))
    return edges


@dataclasses.dataclass(frozen=True)
class QuadRule:
    """A frozen quadrature rule with cached kernel values.

    ``weighted(fn)`` computes the integral of ``fn * kernel`` by
    re-weighting the cached kernel values; this is the fast path the root
    finder uses for every trial shift.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kernel_vals: np.ndarray
    kernel_weights: np.ndarray
    lo: float
    hi: float
    edges: np.ndarray

    @property
    def total(self) -> float:
        return float(self.kernel_weights.sum())

    def weighted(self, fn) -> float:
        return float(self.kernel_weights @ np.asarray(fn(self.nodes), dtype=float))

    def moment(self, k: int) -> float:
        return float(self.kernel_weights @ self.nodes**k)


def _rule_from_edges(kernel, edges) -> QuadRule:
    nodes, weights = _panel_nodes(edges[:-1], edges[1:], GL_HIGH)
    s = nodes.ravel()
    w = weights.ravel()
    kv = np.asarray(kernel(s), dtype=float)
    return QuadRule(
        nodes=s,
        weights=w,
        kernel_vals=kv,
        kernel_weights=w * kv,
        lo=float(edges[0]),
        hi=float(edges[-1]),
        edges=np.asarray(edges, dtype=float),
    )


def build_kernel_rule(
    kernel,
    support,
    window,
    probes=(),
    rel_tol=1e-9,
    tail_cutoff=1e-12,
    max_panels=512,
) -> QuadRule:
    """Build a rule that resolves ``kernel`` and every ``probe * kernel``.

    ``support`` bounds the integrand domain (entries may be infinite);
    ``window`` is the model-supplied finite region that carries essentially
    all kernel mass. Probes are weight functions (such as W' at trial
    shifts) whose products with the kernel must also be integrated
    accurately by the frozen rule.
    """
    fns = [kernel] + [
        (lambda s, p=p: np.asarray(p(s), dtype=float) * np.asarray(kernel(s), dtype=float))
        for p in probes
    ]
    lo, hi = extend_window(fns, window[0], window[1], support, tail_cutoff)
    edges = refine_panels(fns, lo, hi, rel_tol, max_panels=max_panels)
    return _rule_from_edges(kernel, edges)


def refined_rule(rule: QuadRule, kernel) -> QuadRule:
    """Split every panel of ``rule`` once; used as a verification pass."""
    edges = rule.edges
    mids = 0.5 * (edges[:-1] + edges[1:])
    new_edges = np.sort(np.concatenate([edges, mids]))
    return _rule_from_edges(kernel, new_edges)


def integrate(fn, lo, hi, support=None, rel_tol=1e-10, tail_cutoff=1e-13, max_panels=512):
    """Adaptive integral of a single vectorized function.

    ``lo``/``hi`` give the finite core window; ``support`` (defaults to the
    window itself) marks whether tails must be explored.
    """
    if support is None:
        support = (lo, hi)
    rule = build_kernel_rule(
        fn, support, (lo, hi), rel_tol=rel_tol, tail_cutoff=tail_cutoff, max_panels=max_panels
    )
    return rule.total
