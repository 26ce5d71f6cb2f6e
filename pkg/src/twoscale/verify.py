"""Randomized property suites for the discrete structural results.

Each suite returns a :class:`SuiteResult`; ``run_all`` drives them for the
``verify`` command.  Seeds are fixed so runs are reproducible.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .convex import (
    ConvexEnvelopeResult,
    alexandroff_check,
    check_hyper_rectangle_bound,
    contact_second_difference_check,
    convex_envelope,
    polygon_area,
    rectangle_polygon,
)
from .harness import cached_mesh, continuous_dependence_ratio
from .mesh import DomainSpec, TriMesh, classify_delta_interior
from .operator import (
    OperatorContext,
    apply_T_all,
    build_context,
    det_concavity_gap,
    is_discretely_convex,
    product_form_T_all,
    second_differences,
    trace_bound_gap,
)
from .pwl import NodalField, interpolate
from .solver import Problem, SolverConfig, solve

logger = logging.getLogger(__name__)

SEED = 20240607


@dataclass
class SuiteResult:
    name: str
    passed: bool
    instances: int
    violations: int
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"{status} {self.name}: {self.instances} instances, {self.violations} violations ({extra})"

    def to_dict(self):
        return asdict(self)


def _fmt(v):
    return f"{v:.3g}" if isinstance(v, float) else str(v)


def default_setup(h_target=1 / 8, seed=0):
    mesh = cached_mesh(DomainSpec.disk(), h_target, seed)
    ctx = build_context(mesh, mesh.h ** 0.5, mesh.h ** 0.5)
    return mesh, ctx


# -- random fields -------------------------------------------------------------------


def random_convex_function(rng):
    """Quadratic form plus a max of affine pieces plus a cone, all random."""
    A = rng.standard_normal((2, 2))
    Q = A @ A.T + 0.05 * np.eye(2)
    L = rng.standard_normal((rng.integers(1, 5), 3))
    c = rng.uniform(-0.5, 0.5, 2)
    s = rng.uniform(0, 1)

    def u(x):
        x = np.asarray(x, dtype=float)
        quad = 0.5 * np.einsum("...i,ij,...j->...", x, Q, x)
        aff = np.max(x @ L[:, :2].T + L[:, 2], axis=-1)
        return quad + aff + s * np.linalg.norm(x - c, axis=-1)

    return u


def random_field(mesh: TriMesh, rng) -> NodalField:
    """Unstructured noise on top of a smooth profile."""
    base = interpolate(mesh, random_convex_function(rng)).values
    return NodalField(mesh, base + rng.uniform(0.01, 0.5) * rng.standard_normal(mesh.n_nodes))


def random_convex_field(mesh: TriMesh, rng) -> NodalField:
    """Either the interpolant of a random convex function or the envelope of a noisy field."""
    if rng.random() < 0.5:
        return interpolate(mesh, random_convex_function(rng))
    return checked_envelope(mesh, random_field(mesh, rng)).envelope_field


def envelope_invariants(mesh: TriMesh, field: NodalField, res: ConvexEnvelopeResult, tol=1e-10):
    """Idempotence and coincidence of minima; returns a list of failure messages."""
    bad = []
    w = field.values
    if np.any(res.values > w + 1e-12 * (1 + np.abs(w))):
        bad.append("envelope above field")
    if abs(res.values.min() - w.min()) > tol:
        bad.append("minima differ")
    imin = int(np.argmin(w))
    if abs(res.values[imin] - w[imin]) > tol:
        bad.append("minimum not a contact point")
    again = convex_envelope(mesh, res.envelope_field)
    if np.max(np.abs(again.values - res.values)) > tol * (1 + np.abs(res.values).max()):
        bad.append("envelope not idempotent")
    for poly in res.polygons.values():
        if len(poly) >= 3:
            e = np.roll(poly, -1, axis=0) - poly
            cr = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
            if np.any(cr < -1e-12):
                bad.append("non-convex subdifferential polygon")
                break
    return bad


_ENVELOPE_FAILURES: list = []


def checked_envelope(mesh, field) -> ConvexEnvelopeResult:
    """Envelope with the idempotence / minima checks recorded on the side."""
    res = convex_envelope(mesh, field)
    _ENVELOPE_FAILURES.extend(envelope_invariants(mesh, field, res))
    return res


# -- suites --------------------------------------------------------------------------------


def suite_convexity_equivalence(ctx: OperatorContext, n=100, seed=SEED) -> SuiteResult:
    """``T >= 0`` everywhere iff discretely convex; product form equals ``T`` when convex."""
    rng = np.random.default_rng(seed)
    viol, worst = 0, 0.0
    n_convex = 0
    for k in range(n):
        w = random_field(ctx.mesh, rng) if k % 2 else random_convex_field(ctx.mesh, rng)
        T = apply_T_all(ctx, w)
        ok, _ = is_discretely_convex(ctx, w)
        nonneg = bool(np.all(T >= -1e-10 * (1 + np.abs(T))))
        # T >= 0 needs each bracket >= 0, impossible with a negative second difference
        sd = second_differences(w, ctx.stencil)
        tiny = np.all(sd >= -1e-10)
        if nonneg != ok or ok != tiny:
            viol += 1
        if ok:
            n_convex += 1
            gap = np.max(np.abs(product_form_T_all(ctx, w) - T) / (1 + np.abs(T)))
            worst = max(worst, float(gap))
            # sd in [-1e-10, 0) from envelope rounding perturbs the bracket by as much
            if gap > 1e-10:
                viol += 1
    return SuiteResult("convexity-equivalence", viol == 0, n, viol,
                       {"convex_fields": n_convex, "max_rel_product_gap": worst})


def _random_problem_pair(mesh, rng):
    """``f1 >= f2 >= 0`` and ``g1 <= g2``, all smooth random data."""
    c = rng.uniform(-0.3, 0.3, 2)
    a, b = rng.uniform(0.0, 2.0, 2)
    bump = rng.uniform(0.0, 1.5)
    off = rng.uniform(0.0, 0.3)
    gq = rng.uniform(0.2, 1.0)
    gl = rng.standard_normal(3) * 0.3

    def f2(x):
        return a + b * np.sum((x - c) ** 2, axis=-1)

    def f1(x):
        return f2(x) + bump * np.exp(-4 * np.sum((x + c) ** 2, axis=-1))

    def g1(x):
        return gq * np.sum(x ** 2, axis=-1) + gl[0] + x @ gl[1:]

    def g2(x):
        return g1(x) + off * (1 + 0.5 * np.sin(3 * x[..., 0]))

    dom = mesh.domain
    return Problem(dom, f1, g1), Problem(dom, f2, g2)


def suite_comparison(ctx: OperatorContext, n=10, seed=SEED, cfg=None) -> SuiteResult:
    cfg = cfg or SolverConfig(nodal_tol=1e-10, bisection_tol=1e-10)
    rng = np.random.default_rng(seed + 1)
    viol, worst = 0, -np.inf
    for _ in range(n):
        p1, p2 = _random_problem_pair(ctx.mesh, rng)
        u1, _ = solve(ctx, p1, cfg)
        u2, _ = solve(ctx, p2, cfg)
        excess = float(np.max(u1.values - u2.values))
        worst = max(worst, excess)
        if excess > 1e-6:
            viol += 1
    return SuiteResult("comparison-principle", viol == 0, n, viol, {"max_u1_minus_u2": worst})


def suite_continuous_dependence(ctx: OperatorContext, n=10, seed=SEED, cfg=None,
                                bound=100.0) -> SuiteResult:
    """Measured constant in the continuous-dependence estimate stays bounded."""
    cfg = cfg or SolverConfig(nodal_tol=1e-10, bisection_tol=1e-10)
    rng = np.random.default_rng(seed + 2)
    ratios = []
    for _ in range(n):
        p1, p2 = _random_problem_pair(ctx.mesh, rng)
        p2 = Problem(p2.domain, p2.f, p1.g)
        u1, _ = solve(ctx, p1, cfg)
        u2, _ = solve(ctx, p2, cfg)
        x = ctx.mesh.nodes[ctx.stencil.nodes]
        _, _, r = continuous_dependence_ratio(ctx, u1, u2, p1.f(x), p2.f(x))
        ratios.append(r)
    ratios = np.array(ratios)
    viol = int(np.sum(~np.isfinite(ratios) | (ratios > bound)))
    return SuiteResult("continuous-dependence", viol == 0, n, viol,
                       {"max_C_meas": float(ratios.max())})


def suite_operator_concavity(ctx: OperatorContext, n=100, seed=SEED) -> SuiteResult:
    rng = np.random.default_rng(seed + 3)
    viol, worst = 0, np.inf
    for _ in range(n):
        u = random_convex_field(ctx.mesh, rng)
        w = random_convex_field(ctx.mesh, rng)
        tu = np.maximum(product_form_T_all(ctx, u), 0.0)
        tw = np.maximum(product_form_T_all(ctx, w), 0.0)
        tuw = np.maximum(product_form_T_all(ctx, u + w, 2e-10), 0.0)
        gap = np.sqrt(tuw) - np.sqrt(tu) - np.sqrt(tw)
        worst = min(worst, float(gap.min()))
        viol += int(np.sum(gap < -1e-9))
    return SuiteResult("operator-concavity", viol == 0, n, viol, {"min_gap": worst})


def random_spsd(rng, rank=None):
    A = rng.standard_normal((2, 2))
    if rank == 1:
        A[:, 1] = 0.0
    return A @ A.T


def random_spd_unit_det(rng):
    A = random_spsd(rng) + 1e-3 * np.eye(2)
    return A / np.sqrt(np.linalg.det(A))


def suite_matrix_concavity(n=100, seed=SEED) -> SuiteResult:
    rng = np.random.default_rng(seed + 4)
    viol, worst_c, worst_t = 0, np.inf, np.inf
    for k in range(n):
        A = random_spsd(rng, rank=1 if k % 5 == 0 else None)
        B = random_spsd(rng, rank=1 if k % 7 == 0 else None)
        g = det_concavity_gap(A, B)
        t = trace_bound_gap(A, random_spd_unit_det(rng))
        scale = 1 + np.abs(A).max() + np.abs(B).max()
        worst_c = min(worst_c, g)
        worst_t = min(worst_t, t)
        viol += int(g < -1e-12 * scale) + int(t < -1e-12 * scale)
    return SuiteResult("matrix-concavity", viol == 0, n, viol,
                       {"min_concavity_gap": worst_c, "min_trace_gap": worst_t})


def monte_carlo_area(poly, rng, samples=1_000_000):
    """Hit-or-miss area of a convex polygon inside its bounding box."""
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    p = lo + (hi - lo) * rng.random((samples, 2))
    inside = np.ones(samples, bool)
    nxt = np.roll(poly, -1, axis=0)
    for a, b in zip(poly, nxt):
        inside &= (b[0] - a[0]) * (p[:, 1] - a[1]) - (b[1] - a[1]) * (p[:, 0] - a[0]) >= 0
    return float(np.prod(hi - lo) * inside.mean())


def suite_hyper_rectangle(n=20, seed=SEED, samples=1_000_000) -> SuiteResult:
    rng = np.random.default_rng(seed + 5)
    viol, worst = 0, 0.0
    for _ in range(n):
        phi = rng.uniform(0, 2 * np.pi)
        v = np.array([[np.cos(phi), np.sin(phi)], [-np.sin(phi), np.cos(phi)]])
        a = rng.uniform(-1, 1, 2)
        b = a + rng.uniform(0.1, 2, 2)
        poly = rectangle_polygon(v, a, b)
        exact = float(np.prod(b - a))
        rel = abs(monte_carlo_area(poly, rng, samples) - exact) / exact
        worst = max(worst, rel)
        viol += int(rel > 0.01) + int(abs(polygon_area(poly) - exact) > 1e-12 * exact)
    return SuiteResult("hyper-rectangle-volume", viol == 0, n, viol, {"max_rel_error": worst})


def suite_subdifferential_bound(ctx: OperatorContext, n=50, seed=SEED) -> SuiteResult:
    rng = np.random.default_rng(seed + 6)
    inner = set(classify_delta_interior(ctx.mesh, ctx.delta)[0].tolist())
    viol, checked, worst = 0, 0, 0.0
    for _ in range(n):
        w = random_convex_field(ctx.mesh, rng)
        res = checked_envelope(ctx.mesh, w)
        for i in res.contact:
            if int(i) not in inner:
                continue
            lhs, rhs = check_hyper_rectangle_bound(ctx, res, int(i))
            checked += 1
            if rhs > 0:
                worst = max(worst, lhs / rhs)
            if lhs > rhs + 1e-9:
                viol += 1
        viol += len(contact_second_difference_check(ctx, w, res))
    return SuiteResult("subdifferential-bound", viol == 0, n, viol,
                       {"contact_nodes_checked": checked, "max_lhs_over_rhs": worst})


def suite_alexandroff(mesh: TriMesh, n=100, seed=SEED, bound=100.0) -> SuiteResult:
    rng = np.random.default_rng(seed + 7)
    viol, worst = 0, 0.0
    for _ in range(n):
        w = random_field(mesh, rng).values
        w = w - w[mesh.boundary].min()
        w[mesh.boundary] = np.abs(w[mesh.boundary])
        field = NodalField(mesh, w)
        res = checked_envelope(mesh, field)
        _, _, ratio = alexandroff_check(mesh, field, res)
        worst = max(worst, ratio)
        viol += int(not np.isfinite(ratio) or ratio > bound)
    return SuiteResult("alexandroff", viol == 0, n, viol, {"max_ratio": worst})


def suite_envelope_invariants() -> SuiteResult:
    """Summarises the idempotence / minima checks run on every envelope so far."""
    n = len(_ENVELOPE_FAILURES)
    return SuiteResult("envelope-invariants", n == 0, -1, n,
                       {"failures": ";".join(sorted(set(_ENVELOPE_FAILURES))) or "none"})


def run_all(h_target=1 / 8, seed=SEED, quick=False) -> list[SuiteResult]:
    """Every property suite; ``quick`` trims instance counts for smoke runs."""
    _ENVELOPE_FAILURES.clear()
    mesh, ctx = default_setup(h_target)
    k = 5 if quick else 1
    suites = [
        lambda: suite_convexity_equivalence(ctx, 100 // k, seed),
        lambda: suite_comparison(ctx, 10 // k, seed),
        lambda: suite_continuous_dependence(ctx, 10 // k, seed),
        lambda: suite_operator_concavity(ctx, 100 // k, seed),
        lambda: suite_matrix_concavity(100, seed),
        lambda: suite_hyper_rectangle(20 // k, seed, 1_000_000 // k),
        lambda: suite_subdifferential_bound(ctx, 50 // k, seed),
        lambda: suite_alexandroff(mesh, 100 // k, seed),
    ]
    out = []
    for run in suites:
        t0 = time.perf_counter()
        res = run()
        res.seconds = time.perf_counter() - t0
        logger.info(res.line())
        out.append(res)
    out.append(suite_envelope_invariants())
    return out
