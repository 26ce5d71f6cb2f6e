"""Problem catalog, coupling rules, consistency and convergence-rate studies."""

from __future__ import annotations

import csv
import json
import logging
import math
import re
import subprocess
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from .convex import convex_envelope
from .errors import InvalidParameterError, TwoScaleError
from .mesh import DomainSpec, TriMesh, classify_delta_interior, generate_mesh
from .operator import apply_T_all, brackets, build_context
from .pwl import NodalField, exact_second_differences, interpolate
from .solver import Problem, SolverConfig, solve

logger = logging.getLogger(__name__)

COLUMNS = ("h", "delta", "theta", "err_Linf_nodes", "err_Linf_centroids",
           "consistency_interior", "consistency_boundary", "residual", "sweeps", "seconds")

REGULARITY = ("classical-smooth", "piecewise-smooth", "degenerate")


# -- problem catalog --------------------------------------------------------


def _sq(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x * x, axis=-1)


@dataclass
class TestProblem:
    """A catalog entry: the boundary value problem plus what is known about it."""

    __test__ = False  # not a pytest class

    name: str
    problem: Problem
    regularity: str
    exact: Callable | None = None
    det_hessian: Callable | None = None
    kink_radius: float | None = None

    def __post_init__(self):
        if self.regularity not in REGULARITY:
            raise InvalidParameterError(f"unknown regularity class {self.regularity!r}")

    def fd_check(self, n=100, seed=0, step=1e-4, tol=1e-4):
        """Max ``|det FD-Hessian(u) - f|`` at random points of the domain.

        Points within ``3 step`` of a known kink circle are resampled since the
        Hessian jumps there.
        """
        if self.exact is None:
            return 0.0
        rng = np.random.default_rng(seed)
        dom = self.problem.domain
        pts = []
        while len(pts) < n:
            p = rng.uniform(-1, 1, size=2) * dom.diameter() / 2 * 0.98 + np.asarray(dom.center)
            if dom.inside_distance(p[None])[0] <= 2 * step:
                continue
            if self.kink_radius is not None and abs(np.linalg.norm(p) - self.kink_radius) < 3 * step:
                continue
            pts.append(p)
        pts = np.array(pts)
        err = np.abs(fd_hessian_det(self.exact, pts, step) - self.problem.f(pts))
        return float(err.max())


def fd_hessian_det(u, pts, step=1e-4):
    """Determinant of the central finite-difference Hessian of ``u``."""
    e0 = np.array([step, 0.0])
    e1 = np.array([0.0, step])
    u0 = u(pts)
    uxx = (u(pts + e0) - 2 * u0 + u(pts - e0)) / step ** 2
    uyy = (u(pts + e1) - 2 * u0 + u(pts - e1)) / step ** 2
    uxy = (u(pts + e0 + e1) - u(pts + e0 - e1) - u(pts - e0 + e1) + u(pts - e0 - e1)) / (4 * step ** 2)
    return uxx * uyy - uxy ** 2


def _affine(x):
    x = np.asarray(x, dtype=float)
    return 1.0 + 0.5 * x[..., 0] - 0.25 * x[..., 1]


def _quadratic(x):
    return 0.5 * _sq(x)


def _exp_u(x):
    return np.exp(0.5 * _sq(x))


def _exp_f(x):
    r2 = _sq(x)
    return (1.0 + r2) * np.exp(r2)


CONE_R0 = 0.2


def _cone_u(x):
    r = np.sqrt(_sq(x))
    return 0.5 * np.maximum(r - CONE_R0, 0.0) ** 2


def _cone_f(x):
    r = np.sqrt(_sq(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        f = 1.0 - CONE_R0 / r
    return np.where(r > CONE_R0, f, 0.0)


def _zero(x):
    return np.zeros(np.asarray(x).shape[:-1])


def _one(x):
    return np.ones(np.asarray(x).shape[:-1])


def catalog(domain: DomainSpec | None = None) -> list[TestProblem]:
    dom = domain or DomainSpec.disk()
    return [
        TestProblem("affine", Problem(dom, _zero, _affine, _affine, degenerate=True, name="affine"),
                    "classical-smooth", _affine, _zero),
        TestProblem("quadratic", Problem(dom, _one, _quadratic, _quadratic, name="quadratic"),
                    "classical-smooth", _quadratic, _one),
        TestProblem("exp-smooth", Problem(dom, _exp_f, _exp_u, _exp_u, name="exp-smooth"),
                    "classical-smooth", _exp_u, _exp_f),
        TestProblem("cone-smoothed",
                    Problem(dom, _cone_f, _cone_u, _cone_u, degenerate=True, name="cone-smoothed"),
                    "degenerate", _cone_u, _cone_f, kink_radius=CONE_R0),
    ]


def get_problem(name: str, domain: DomainSpec | None = None) -> TestProblem:
    for tp in catalog(domain):
        if tp.name == name:
            return tp
    raise InvalidParameterError(f"unknown problem {name!r}; known: {[t.name for t in catalog()]}")


# -- couplings ----------------------------------------------------------------

_RULE = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*\s*)?h\s*\^\s*\(?\s*([0-9.eE+/-]+)\s*\)?\s*$")


def _number(s: str) -> float:
    if "/" in s:
        a, b = s.split("/")
        return float(a) / float(b)
    return float(s)


def parse_rule(text: str):
    """``"c*h^g"``, ``"h^g"`` or a plain number (``g = 0``) -> ``(c, g)``.

    ``"axes"`` (only meaningful for theta) returns ``None``.
    """
    t = text.strip().lower()
    if t in ("axes", "none", "0"):
        return None
    m = _RULE.match(t)
    if m:
        c = _number(m.group(1)) if m.group(1) else 1.0
        return c, _number(m.group(2))
    try:
        return _number(t), 0.0
    except ValueError:
        raise InvalidParameterError(f"cannot parse coupling rule {text!r}") from None


@dataclass
class CouplingRule:
    """``delta = c_delta h^g_delta`` and ``theta = c_theta h^g_theta``.

    ``g_theta = None`` selects the exact axes pair instead of a direction net.
    A zero exponent means the scale is held fixed.
    """

    c_delta: float = 1.0
    g_delta: float = 0.5
    c_theta: float = 1.0
    g_theta: float | None = 0.5

    def __post_init__(self):
        if not 0.0 <= self.g_delta <= 1.0:
            raise InvalidParameterError("delta exponent must lie in [0, 1]")
        if self.c_delta <= 0 or (self.g_theta is not None and self.c_theta <= 0):
            raise InvalidParameterError("prefactors must be positive")

    @classmethod
    def parse(cls, delta_rule: str, theta_rule: str = "axes") -> CouplingRule:
        d = parse_rule(delta_rule)
        if d is None:
            raise InvalidParameterError("delta rule cannot be 'axes'")
        t = parse_rule(theta_rule)
        return cls(d[0], d[1], *(t if t is not None else (1.0, None)))

    def delta(self, h: float) -> float:
        return self.c_delta * h ** self.g_delta

    def theta(self, h: float) -> float | None:
        if self.g_theta is None:
            return None
        return min(self.c_theta * h ** self.g_theta, 1.0)

    def describe(self) -> dict:
        return {"delta": f"{self.c_delta!r}*h^{self.g_delta!r}",
                "theta": "axes" if self.g_theta is None else f"{self.c_theta!r}*h^{self.g_theta!r}"}


STANDARD_COUPLING = CouplingRule(1.0, 0.5, 1.0, 0.5)


def degenerate_coupling(beta=2.5) -> CouplingRule:
    """``delta = h^(2/beta)``; theta balances ``theta^2`` against ``h^2/delta^2``."""
    g = 2.0 / beta
    return CouplingRule(1.0, g, 1.0, 1.0 - g)


# -- reports ------------------------------------------------------------------


def git_revision() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def eoc(h, e):
    """Consecutive orders ``log(e_k / e_k+1) / log(h_k / h_k+1)``."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])).tolist()


def fitted_order(h, e) -> float:
    """Least-squares slope of ``log e`` against ``log h``."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    if len(h) < 2:
        return float("nan")
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


@dataclass
class RateReport:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    extras: list = field(default_factory=list)
    failure: dict | None = None

    def add_row(self, extra=None, **values):
        row = {c: float(values.get(c, float("nan"))) for c in COLUMNS}
        self.rows.append(row)
        self.extras.append(extra or {})
        order = np.argsort([-r["h"] for r in self.rows], kind="stable")
        self.rows = [self.rows[k] for k in order]
        self.extras = [self.extras[k] for k in order]

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def eoc(self, name) -> list:
        return eoc(self.column("h"), self.column(name))

    def fitted_order(self, name) -> float:
        return fitted_order(self.column("h"), self.column(name))

    def eoc_table(self) -> dict:
        names = [c for c in COLUMNS[3:7] if np.all(np.isfinite(self.column(c)))]
        return {c: self.eoc(c) for c in names} if len(self.rows) > 1 else {}

    def to_dict(self) -> dict:
        return {"columns": list(COLUMNS), "rows": [[r[c] for c in COLUMNS] for r in self.rows],
                "eoc": self.eoc_table(), "extras": self.extras,
                "metadata": self.metadata, "failure": self.failure}

    @classmethod
    def from_dict(cls, d: dict) -> RateReport:
        cols = d["columns"]
        rows = [{c: float(v) for c, v in zip(cols, r)} for r in d["rows"]]
        return cls(rows, d.get("metadata", {}), d.get("extras", [{} for _ in rows]), d.get("failure"))


def emit_report(report: RateReport, fmt: str, path) -> Path:
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(COLUMNS)
            for r in report.rows:
                wr.writerow([repr(r[c]) for c in COLUMNS])
    elif fmt == "json":
        path.write_text(json.dumps(report.to_dict(), indent=2))
    else:
        raise InvalidParameterError(f"unknown report format {fmt!r}")
    return path


def read_report(path) -> RateReport:
    return RateReport.from_dict(json.loads(Path(path).read_text()))


# -- studies --------------------------------------------------------------------


@lru_cache(maxsize=16)
def cached_mesh(domain: DomainSpec, h_target: float, seed: int = 0) -> TriMesh:
    return generate_mesh(domain, h_target, seed=seed)


def _metadata(tp, coupling, seed, kind, **more):
    meta = {"study": kind, "problem": tp.name, "regularity": tp.regularity,
            "coupling": coupling.describe(), "seed": seed, "git_revision": git_revision(),
            "dim": 2}
    meta.update(more)
    return meta


def consistency_errors(tp: TestProblem, mesh: TriMesh, delta: float, theta, reference="pde"):
    """``(interior, boundary-layer, ctx)`` consistency errors of ``T[I_h u]``.

    ``reference="pde"`` compares with ``det D^2 u``; ``"semi-discrete"`` with the
    operator built from exact (not interpolated) point values of ``u``, which
    isolates the interpolation part of the error.
    """
    ctx = build_context(mesh, delta, theta)
    uh = interpolate(mesh, tp.exact)
    T = apply_T_all(ctx, uh)
    if reference == "pde":
        ref = np.asarray(tp.det_hessian(mesh.nodes[ctx.stencil.nodes]), dtype=float)
    elif reference == "semi-discrete":
        ref = np.min(brackets(exact_second_differences(tp.exact, ctx.stencil), ctx.pairs), axis=1)
    else:
        raise InvalidParameterError(f"unknown reference {reference!r}")
    err = np.abs(T - ref)
    inner, layer = classify_delta_interior(mesh, delta)
    rows = ctx.stencil.row_of
    e_in = float(err[rows[inner]].max()) if len(inner) else float("nan")
    e_bd = float(err[rows[layer]].max()) if len(layer) else 0.0
    return e_in, e_bd, ctx


def consistency_study(tp: TestProblem, h_list, coupling: CouplingRule, seed=0,
                      reference="pde") -> RateReport:
    if tp.exact is None:
        raise InvalidParameterError("consistency study needs an exact solution")
    rep = RateReport(metadata=_metadata(tp, coupling, seed, "consistency", reference=reference))
    for ht in sorted(h_list, reverse=True):
        t0 = time.perf_counter()
        mesh = cached_mesh(tp.problem.domain, float(ht), seed)
        h = mesh.h
        delta, theta = coupling.delta(h), coupling.theta(h)
        e_in, e_bd, ctx = consistency_errors(tp, mesh, delta, theta, reference)
        rep.add_row(h=h, delta=delta, theta=float("nan") if theta is None else theta,
                    consistency_interior=e_in, consistency_boundary=e_bd,
                    seconds=time.perf_counter() - t0,
                    extra={"h_target": float(ht), "n_nodes": mesh.n_nodes,
                           "n_tuples": int(len(ctx.pairs))})
        logger.info("consistency %s h=%.4g: interior %.3e boundary %.3e", tp.name, h, e_in, e_bd)
    return rep


def solution_errors(tp: TestProblem, uh: NodalField):
    """``(max nodal |u_h - I_h u|, max centroid |u_h - u|)``."""
    mesh = uh.mesh
    e_nodes = float(np.max(np.abs(uh.values - tp.exact(mesh.nodes))))
    cvals = uh.values[mesh.elements].mean(axis=1)
    e_cent = float(np.max(np.abs(cvals - tp.exact(mesh.centroids))))
    return e_nodes, e_cent


def convergence_study(tp: TestProblem, h_list, coupling: CouplingRule,
                      cfg: SolverConfig | None = None, seed=0) -> RateReport:
    """Solve on each level; a solver failure ends the study with a failure entry."""
    if tp.exact is None:
        raise InvalidParameterError("convergence study needs an exact solution")
    cfg = cfg or SolverConfig()
    rep = RateReport(metadata=_metadata(
        tp, coupling, seed, "convergence", nodal_tol=cfg.nodal_tol,
        bisection_tol=cfg.bisection_tol, order=cfg.order, mode=cfg.mode))
    for ht in sorted(h_list, reverse=True):
        mesh = cached_mesh(tp.problem.domain, float(ht), seed)
        h = mesh.h
        delta, theta = coupling.delta(h), coupling.theta(h)
        t0 = time.perf_counter()
        ctx = build_context(mesh, delta, theta)
        try:
            uh, sr = solve(ctx, tp.problem, cfg)
        except TwoScaleError as exc:
            rep.failure = {"h": h, "h_target": float(ht), "error": type(exc).__name__,
                           "message": str(exc)}
            logger.error("convergence %s failed at h=%.4g: %s", tp.name, h, exc)
            break
        seconds = time.perf_counter() - t0
        e_nodes, e_cent = solution_errors(tp, uh)
        _, layer = classify_delta_interior(mesh, delta)
        ih = tp.exact(mesh.nodes)
        e_layer = float(np.max(np.abs(uh.values[layer] - ih[layer]))) if len(layer) else 0.0
        rep.add_row(h=h, delta=delta, theta=float("nan") if theta is None else theta,
                    err_Linf_nodes=e_nodes, err_Linf_centroids=e_cent, residual=sr.residual,
                    sweeps=sr.iterations, seconds=seconds,
                    extra={"h_target": float(ht), "n_nodes": mesh.n_nodes,
                           "n_tuples": int(len(ctx.pairs)), "boundary_layer_error": e_layer,
                           "boundary_layer_ratio": e_layer / delta,
                           "min_update": sr.min_update})
        logger.info("convergence %s h=%.4g: err %.3e (%d sweeps, %.1fs)", tp.name, h, e_nodes,
                    sr.iterations, seconds)
    return rep


# -- continuous dependence ----------------------------------------------------------


def continuous_dependence_ratio(ctx, u1: NodalField, u2: NodalField, f1, f2, dim=2):
    """``(lhs, rhs, C_meas)`` for two discrete solutions sharing boundary data.

    ``lhs = max (u1 - u2)^-`` and ``rhs = delta (sum_C (f1^(1/d) - f2^(1/d))_+^d)^(1/d)``
    with ``C`` the lower contact set of ``u1 - u2``.
    """
    mesh = ctx.mesh
    diff = u1 - u2
    lhs = float(np.max(np.maximum(-diff.values, 0.0)))
    env = convex_envelope(mesh, diff)
    rows = ctx.stencil.row_of[env.contact]
    a = np.asarray(f1, dtype=float)[rows] ** (1.0 / dim)
    b = np.asarray(f2, dtype=float)[rows] ** (1.0 / dim)
    s = float(np.sum(np.maximum(a - b, 0.0) ** dim))
    rhs = ctx.delta * s ** (1.0 / dim)
    if lhs == 0.0:
        return lhs, rhs, 0.0
    return lhs, rhs, (lhs / rhs if rhs > 0 else math.inf)
