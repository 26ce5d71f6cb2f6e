"""Command line entry point: ``twoscale {mesh,solve,consistency,rates,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import TwoScaleError
from .harness import (
    CouplingRule,
    consistency_study,
    convergence_study,
    emit_report,
    get_problem,
    git_revision,
    parse_rule,
    solution_errors,
)
from .mesh import DomainSpec, generate_mesh, write_mesh
from .operator import build_context
from .pwl import write_field_csv
from .solver import SolverConfig, solve
from .verify import SEED, run_all

logger = logging.getLogger("twoscale")


def parse_domain(text: str) -> DomainSpec:
    """``disk``, ``disk:R`` or ``ellipse:a,b``."""
    kind, _, args = text.partition(":")
    vals = [float(v) for v in args.split(",")] if args else []
    if kind == "disk":
        return DomainSpec.disk(*vals)
    if kind == "ellipse":
        if len(vals) != 2:
            raise argparse.ArgumentTypeError("ellipse needs semi-axes, e.g. ellipse:1,0.5")
        return DomainSpec.ellipse(*vals)
    raise argparse.ArgumentTypeError(f"unknown domain {text!r}")


def parse_h_list(text: str):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if "/" in tok:
            a, b = tok.split("/")
            out.append(float(a) / float(b))
        else:
            out.append(float(tok))
    return out


def _scale(text: str, h: float):
    """A scale given as a number or a ``c*h^g`` rule evaluated at ``h``."""
    rule = parse_rule(text)
    if rule is None:
        return None
    c, g = rule
    return c * h ** g


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_mesh(args) -> int:
    mesh = generate_mesh(args.domain, args.h, seed=args.seed)
    out = Path(args.out)
    if out.suffix == "":
        out = _out_dir(out) / "mesh.txt"
    write_mesh(mesh, out)
    print(f"wrote {out}: {mesh.n_nodes} nodes, {mesh.n_elements} elements, h={mesh.h:.4g}, "
          f"shape_regularity={mesh.shape_regularity:.3g}")
    return 0


def cmd_solve(args) -> int:
    tp = get_problem(args.problem, args.domain)
    mesh = generate_mesh(args.domain, args.h, seed=args.seed)
    delta = _scale(args.delta, mesh.h)
    if delta is None:
        raise TwoScaleError("delta cannot be 'axes'")
    theta = _scale(args.theta, mesh.h)
    ctx = build_context(mesh, delta, theta)
    cfg = SolverConfig(nodal_tol=args.tol, bisection_tol=args.tol, max_sweeps=args.max_sweeps,
                       order=args.order, mode=args.mode)
    out = _out_dir(args.out)
    payload = {"problem": tp.name, "epsilon": {"h": mesh.h, "delta": delta, "theta": theta},
               "n_nodes": mesh.n_nodes, "n_tuples": int(len(ctx.pairs)), "seed": args.seed,
               "git_revision": git_revision()}
    status = 0
    try:
        uh, report = solve(ctx, tp.problem, cfg)
    except TwoScaleError as exc:
        report = getattr(exc, "report", None)
        uh = getattr(exc, "field", None)
        payload["error"] = f"{type(exc).__name__}: {exc}"
        status = 1
    if report is not None:
        d = report.to_dict()
        d.pop("epsilon")
        payload.update(d)
    if uh is not None:
        write_field_csv(uh, out / "solution.csv")
        if tp.exact is not None:
            e_nodes, e_cent = solution_errors(tp, uh)
            payload["err_Linf_nodes"] = e_nodes
            payload["err_Linf_centroids"] = e_cent
    (out / "report.json").write_text(json.dumps(payload, indent=2))
    print(json.dumps({k: payload[k] for k in payload if k not in ("residual_history", "update_history")}, indent=2))
    return status


def _coupling(args) -> CouplingRule:
    return CouplingRule.parse(args.delta_rule, args.theta_rule)


def _emit(rep, out: Path, stem: str):
    emit_report(rep, "csv", out / f"{stem}.csv")
    emit_report(rep, "json", out / f"{stem}.json")


def _print_report(rep, column):
    for r in rep.rows:
        print(f"h={r['h']:.4g} delta={r['delta']:.4g} theta={r['theta']:.4g} {column}={r[column]:.4e}")
    if len(rep.rows) > 1:
        print(f"EOC {column}: " + ", ".join(f"{v:.3f}" for v in rep.eoc(column))
              + f"; fitted {rep.fitted_order(column):.3f}")


def cmd_consistency(args) -> int:
    tp = get_problem(args.problem, args.domain)
    rep = consistency_study(tp, args.h_list, _coupling(args), args.seed, reference=args.reference)
    _emit(rep, _out_dir(args.out), "consistency")
    _print_report(rep, "consistency_interior")
    if args.min_eoc is not None and rep.fitted_order("consistency_interior") < args.min_eoc:
        print(f"FAIL: fitted order below {args.min_eoc}")
        return 1
    return 0


def cmd_rates(args) -> int:
    tp = get_problem(args.problem, args.domain)
    cfg = SolverConfig(nodal_tol=args.tol, bisection_tol=args.tol, max_sweeps=args.max_sweeps)
    rep = convergence_study(tp, args.h_list, _coupling(args), cfg, args.seed)
    _emit(rep, _out_dir(args.out), "rates")
    _print_report(rep, "err_Linf_nodes")
    if rep.failure is not None:
        print(f"FAIL: {rep.failure['error']} at h={rep.failure['h']:.4g}")
        return 1
    if args.min_eoc is not None and rep.fitted_order("err_Linf_nodes") < args.min_eoc:
        print(f"FAIL: fitted order below {args.min_eoc}")
        return 1
    return 0


def cmd_verify(args) -> int:
    results = run_all(h_target=args.h, seed=args.seed, quick=args.quick)
    for r in results:
        print(r.line())
    out = _out_dir(args.out)
    (out / "verify.json").write_text(json.dumps([r.to_dict() for r in results], indent=2))
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twoscale", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=0):
        sp.add_argument("--domain", type=parse_domain, default=DomainSpec.disk())
        sp.add_argument("--seed", type=int, default=seed)
        sp.add_argument("--out", default="out")

    sp = sub.add_parser("mesh", help="generate and write a mesh")
    common(sp)
    sp.add_argument("--h", type=float, required=True)
    sp.set_defaults(func=cmd_mesh)

    sp = sub.add_parser("solve", help="solve one catalog problem")
    common(sp)
    sp.add_argument("--problem", required=True)
    sp.add_argument("--h", type=float, required=True)
    sp.add_argument("--delta", default="h^0.5", help="value or rule c*h^g")
    sp.add_argument("--theta", default="h^0.5", help="value, rule c*h^g, or 'axes'")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-sweeps", type=int, default=100_000)
    sp.add_argument("--order", default="lexicographic",
                    choices=["lexicographic", "red-black", "symmetric"])
    sp.add_argument("--mode", default="gauss-seidel", choices=["gauss-seidel", "jacobi"])
    sp.set_defaults(func=cmd_solve)

    for name, func, help_ in (("consistency", cmd_consistency, "consistency-error study"),
                              ("rates", cmd_rates, "convergence-rate study")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--problem", default="exp-smooth")
        sp.add_argument("--h-list", type=parse_h_list, default=parse_h_list("1/8,1/16,1/32"))
        sp.add_argument("--delta-rule", default="1*h^0.5")
        sp.add_argument("--theta-rule", default="1*h^0.5")
        sp.add_argument("--min-eoc", type=float, default=None,
                        help="fail unless the fitted order reaches this value")
        if name == "consistency":
            sp.add_argument("--reference", default="pde", choices=["pde", "semi-discrete"])
        else:
            sp.add_argument("--tol", type=float, default=1e-10)
            sp.add_argument("--max-sweeps", type=int, default=100_000)
        sp.set_defaults(func=func)

    sp = sub.add_parser("verify", help="run all randomized property suites")
    common(sp, seed=SEED)
    sp.add_argument("--h", type=float, default=1 / 8)
    sp.add_argument("--quick", action="store_true")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TwoScaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
