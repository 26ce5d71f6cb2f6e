import json

import numpy as np
import pytest
import sympy as sp

from twoscale.errors import InvalidParameterError
from twoscale.harness import (
    COLUMNS,
    CouplingRule,
    RateReport,
    cached_mesh,
    catalog,
    consistency_study,
    convergence_study,
    degenerate_coupling,
    emit_report,
    eoc,
    fitted_order,
    get_problem,
    parse_rule,
    read_report,
)
from twoscale.mesh import DomainSpec
from twoscale.operator import apply_T_all, build_context
from twoscale.pwl import interpolate
from twoscale.solver import SolverConfig


def symbolic_det(expr):
    x, y = sp.symbols("x y", real=True)
    H = sp.hessian(expr(x, y), (x, y))
    return sp.lambdify((x, y), sp.simplify(H.det()), "numpy")


def test_catalog_contents():
    names = [t.name for t in catalog()]
    assert names == ["affine", "quadratic", "exp-smooth", "cone-smoothed"]
    tags = {t.name: t.regularity for t in catalog()}
    assert tags["cone-smoothed"] == "degenerate"
    for tp in catalog():
        assert tp.fd_check(100, seed=0) <= 1e-4


def test_exp_smooth_rhs_symbolic():
    det = symbolic_det(lambda x, y: sp.exp((x ** 2 + y ** 2) / 2))
    tp = get_problem("exp-smooth")
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.7, 0.7, (50, 2))
    assert np.allclose(tp.problem.f(pts), det(pts[:, 0], pts[:, 1]), rtol=1e-12)
    assert tp.problem.f(np.zeros((1, 2)))[0] == 1.0


def test_cone_rhs_symbolic_outside_kink():
    r0 = sp.Rational(1, 5)
    det = symbolic_det(lambda x, y: (sp.sqrt(x ** 2 + y ** 2) - r0) ** 2 / 2)
    tp = get_problem("cone-smoothed")
    rng = np.random.default_rng(1)
    ang = rng.uniform(0, 2 * np.pi, 50)
    r = rng.uniform(0.25, 0.99, 50)
    pts = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    assert np.allclose(tp.problem.f(pts), det(pts[:, 0], pts[:, 1]), rtol=1e-12)
    inside = pts[:10] * (0.19 / np.linalg.norm(pts[:10], axis=1))[:, None]
    assert np.all(tp.problem.f(inside) == 0)
    assert np.all(tp.exact(inside) == 0)


def test_quadratic_rhs():
    tp = get_problem("quadratic")
    assert np.all(tp.problem.f(np.random.default_rng(0).uniform(-1, 1, (20, 2))) == 1)


def test_unknown_problem():
    with pytest.raises(InvalidParameterError):
        get_problem("nope")


@pytest.mark.parametrize("text,expected", [
    ("1*h^0.5", (1.0, 0.5)), ("h^1/2", (1.0, 0.5)), ("0.3*h^(0.8)", (0.3, 0.8)),
    ("0.25", (0.25, 0.0)), ("2*h^1", (2.0, 1.0)), ("axes", None)])
def test_parse_rule(text, expected):
    assert parse_rule(text) == expected


def test_coupling():
    c = CouplingRule.parse("h^0.5", "axes")
    assert c.theta(0.01) is None and abs(c.delta(0.01) - 0.1) <= 1e-15
    c = degenerate_coupling(2.5)
    assert abs(c.g_delta - 0.8) <= 1e-15 and abs(c.g_theta - 0.2) <= 1e-15
    assert CouplingRule(1, 0.5, 5, 0.1).theta(0.5) == 1.0  # capped at the admissible maximum
    with pytest.raises(InvalidParameterError):
        CouplingRule(1.0, 1.5)
    with pytest.raises(InvalidParameterError):
        parse_rule("h**x")


def test_eoc_helpers():
    h = [0.1, 0.05, 0.025]
    e = [1e-2, 2.5e-3, 6.25e-4]
    assert np.allclose(eoc(h, e), [2, 2])
    assert abs(fitted_order(h, e) - 2) <= 1e-12


def test_report_sorting_and_json(tmp_path):
    rep = RateReport(metadata={"seed": 3})
    for h, e in [(0.05, 0.2), (0.1, 0.4), (0.0125, 0.05), (0.025, 0.1)]:
        rep.add_row(h=h, delta=h ** 0.5, theta=h ** 0.5, err_Linf_nodes=e, sweeps=10, seconds=0.1)
    assert list(rep.column("h")) == [0.1, 0.05, 0.025, 0.0125]
    path = emit_report(rep, "json", tmp_path / "r.json")
    d = json.loads(path.read_text())
    assert d["columns"] == list(COLUMNS)
    assert len(d["rows"]) == 4 and len(d["eoc"]["err_Linf_nodes"]) == 3
    back = read_report(path)
    path2 = emit_report(back, "json", tmp_path / "r2.json")
    assert path.read_bytes() == path2.read_bytes()
    csv_path = emit_report(rep, "csv", tmp_path / "r.csv")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS) and len(lines) == 5


def test_empty_report_csv(tmp_path):
    p = emit_report(RateReport(), "csv", tmp_path / "e.csv")
    assert p.read_text().splitlines() == [",".join(COLUMNS)]


def test_bad_format(tmp_path):
    with pytest.raises(InvalidParameterError):
        emit_report(RateReport(), "xml", tmp_path / "x")


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit_report(RateReport(), "csv", tmp_path / "missing" / "r.csv")


def test_affine_consistency_and_convergence():
    tp = get_problem("affine")
    rep = consistency_study(tp, [1 / 8, 1 / 16], CouplingRule())
    assert np.all(rep.column("consistency_interior") <= 1e-10)
    assert np.all(rep.column("consistency_boundary") <= 1e-10)
    rep = convergence_study(tp, [1 / 8, 1 / 16, 1 / 32], CouplingRule())
    assert np.all(rep.column("err_Linf_nodes") <= 1e-8)
    assert np.all(rep.column("err_Linf_centroids") <= 1e-8)
    assert rep.metadata["seed"] == 0 and "git_revision" in rep.metadata


def test_convergence_failure_gives_partial_report():
    rep = convergence_study(get_problem("quadratic"), [1 / 8, 1 / 16], CouplingRule(),
                            SolverConfig(max_sweeps=3))
    assert rep.rows == []
    assert rep.failure["error"] == "NonConvergenceError"


def test_quadratic_fixed_delta_consistency_rate():
    rep = consistency_study(get_problem("quadratic"), [1 / 8, 1 / 16, 1 / 32],
                            CouplingRule(0.25, 0.0, 1.0, None))
    e = rep.column("consistency_interior")
    assert np.all(e <= 3 * rep.column("h") ** 2 / 0.25 ** 2)
    assert rep.fitted_order("consistency_interior") >= 1.8


def test_boundary_layer_ratio_bounded():
    rep = convergence_study(get_problem("exp-smooth"), [1 / 8, 1 / 16, 1 / 32], CouplingRule())
    ratios = [x["boundary_layer_ratio"] for x in rep.extras]
    assert max(ratios) <= 100
    e = rep.column("err_Linf_nodes")
    assert np.all(np.diff(e) < 0)


def test_exp_smooth_consistency_on_fixed_subregion():
    # diagnostic: on a fixed ball the coupled error decays at first order; the
    # growing delta-interior region is what slows the full interior maximum

    tp = get_problem("exp-smooth")
    hs, errs = [], []
    for ht in [1 / 8, 1 / 16, 1 / 32, 1 / 64]:
        mesh = cached_mesh(DomainSpec.disk(), ht, 0)
        ctx = build_context(mesh, mesh.h ** 0.5, mesh.h ** 0.5)
        x = mesh.nodes[ctx.stencil.nodes]
        T = apply_T_all(ctx, interpolate(mesh, tp.exact))
        keep = np.linalg.norm(x, axis=1) <= 0.5
        hs.append(mesh.h)
        errs.append(np.max(np.abs(T - tp.det_hessian(x))[keep]))
    assert fitted_order(hs, errs) >= 0.8
