"""Command-line front end: analyze, verify, simulate, approx-error.

Problem instances are JSON documents (matrices as row-major nested
arrays); reports are JSON on stdout; trajectories are CSV files with
every float printed at 17 significant digits so repeated runs are
byte-identical.  Exit codes: 0 success/certified, 2 input error,
3 analysis-negative.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import approx_error as approx
from . import ellipsoidal, numerics, polytopic, simulate, stabilizability
from .errors import InvflowError, ModeMismatch, ProblemFileError, UnstableVertex
from .model import (
    BoxBound,
    DemandBound,
    EllipsoidBound,
    InitialSet,
    Network,
    Problem,
    TargetSet,
    validate,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NEGATIVE = 3

_TOP_KEYS = {"B", "R_w", "control", "P", "k", "x0", "xi", "sim"}
_ELLIPSOID_KEYS = {"type", "R_u"}
_BOX_KEYS = {"type", "lower", "upper"}
_SIM_KEYS = {"dt", "t_max", "demand", "w0", "seed", "hold"}

SIM_DEFAULTS = {"dt": 1e-3, "t_max": 50.0, "demand": "worst", "seed": 0, "hold": 0.1}


def _verdict_tol() -> float:
    raw = os.environ.get("INVFLOW_TOL")
    if raw is None:
        return 1e-10
    try:
        return float(raw)
    except ValueError:
        raise ProblemFileError(f"INVFLOW_TOL is not a number: {raw!r}") from None


def _scalar(value, name: str) -> float:
    if isinstance(value, bool):
        raise ProblemFileError(f"{name} must be a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value))
        except (ValueError, ZeroDivisionError):
            raise ProblemFileError(f"{name} entry {value!r} is not numeric") from None
    raise ProblemFileError(f"{name} must be a number, got {type(value).__name__}")


def _vector(value, name: str) -> np.ndarray:
    if not isinstance(value, list):
        raise ProblemFileError(f"{name} must be an array")
    return np.array([_scalar(v, name) for v in value])


def _matrix(value, name: str) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise ProblemFileError(f"{name} must be an array of arrays")
    rows = [[_scalar(v, name) for v in row] for row in value]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ProblemFileError(f"{name} rows have inconsistent lengths")
    return np.array(rows)


def _reject_unknown(doc: dict, allowed: set, where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ProblemFileError(f"unknown keys in {where}: {sorted(unknown)}")


def parse_problem_file(path) -> tuple[Problem, float | None, dict]:
    """Parse and validate a problem file.

    Returns (validated problem, optional gain k, simulation settings with
    defaults applied).  Unknown keys are rejected at every level.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ProblemFileError("problem file must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "problem file")
    for key in ("B", "R_w", "control", "P"):
        if key not in doc:
            raise ProblemFileError(f"missing required key {key!r}")

    control_doc = doc["control"]
    if not isinstance(control_doc, dict) or "type" not in control_doc:
        raise ProblemFileError('"control" must be an object with a "type"')
    if control_doc["type"] == "ellipsoid":
        _reject_unknown(control_doc, _ELLIPSOID_KEYS, "control")
        if "R_u" not in control_doc:
            raise ProblemFileError("ellipsoid control needs R_u")
        control = EllipsoidBound(R_u=_matrix(control_doc["R_u"], "R_u"))
    elif control_doc["type"] == "box":
        _reject_unknown(control_doc, _BOX_KEYS, "control")
        if "lower" not in control_doc or "upper" not in control_doc:
            raise ProblemFileError("box control needs lower and upper")
        control = BoxBound(
            lower=_vector(control_doc["lower"], "lower"),
            upper=_vector(control_doc["upper"], "upper"),
        )
    else:
        raise ProblemFileError(f"unknown control type {control_doc['type']!r}")

    initial = None
    if "x0" in doc and "xi" in doc:
        raise ProblemFileError("give either x0 or xi, not both")
    if "x0" in doc:
        initial = InitialSet(x0=_vector(doc["x0"], "x0"))
    elif "xi" in doc:
        initial = InitialSet(xi=_scalar(doc["xi"], "xi"))

    sim = dict(SIM_DEFAULTS)
    if "sim" in doc:
        sim_doc = doc["sim"]
        if not isinstance(sim_doc, dict):
            raise ProblemFileError('"sim" must be an object')
        _reject_unknown(sim_doc, _SIM_KEYS, "sim")
        if "dt" in sim_doc:
            sim["dt"] = _scalar(sim_doc["dt"], "dt")
        if "t_max" in sim_doc:
            sim["t_max"] = _scalar(sim_doc["t_max"], "t_max")
        if "demand" in sim_doc:
            if sim_doc["demand"] not in ("worst", "constant", "random"):
                raise ProblemFileError(f"unknown demand kind {sim_doc['demand']!r}")
            sim["demand"] = sim_doc["demand"]
        if "w0" in sim_doc:
            sim["w0"] = _vector(sim_doc["w0"], "w0")
        if "seed" in sim_doc:
            sim["seed"] = int(_scalar(sim_doc["seed"], "seed"))
        if "hold" in sim_doc:
            sim["hold"] = _scalar(sim_doc["hold"], "hold")

    problem = Problem(
        network=Network(B=_matrix(doc["B"], "B")),
        demand=DemandBound(R_w=_matrix(doc["R_w"], "R_w")),
        control=control,
        target=TargetSet(P=_matrix(doc["P"], "P")),
        initial=initial,
    )
    try:
        problem = validate(problem)
    except (InvflowError, ValueError, TypeError) as exc:
        raise ProblemFileError(f"invalid problem: {type(exc).__name__}: {exc}") from None

    k = _scalar(doc["k"], "k") if "k" in doc else None
    return problem, k, sim


def _tolist(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _tri(flag: bool, marginal: bool = False):
    return "marginal" if marginal else bool(flag)


def _gain_pipeline(problem: Problem):
    """Basis split, best response, right inverse and effort form.

    Box-bounded problems have no control quadratic; the right inverse is
    then built against the identity, which gives the minimum-norm H.
    """
    if isinstance(problem.control, EllipsoidBound):
        r_u = problem.control.R_u
    else:
        r_u = np.eye(problem.network.m)
    split = stabilizability.split_basis(problem.network)
    m_best = stabilizability.best_response_matrix(split, r_u)
    h = stabilizability.gain_matrix(split, m_best)
    phi = stabilizability.phi_matrix(h, r_u)
    return split, m_best, h, phi, r_u


def _stabilizability_section(report: stabilizability.StabilizabilityReport) -> dict:
    return {
        "verdict": _tri(report.stabilizable, report.verdict == "marginal"),
        "lambda_max": report.lambda_max,
        "value": report.value,
        "k_hat": report.k_hat,
        "w_star": _tolist(report.w_star),
    }


def _gains_section(split, m_best, h, phi, cert) -> dict:
    return {
        "basis_columns": list(split.basis_indices),
        "M": _tolist(m_best),
        "H": _tolist(h),
        "Phi": _tolist(phi),
        "k": cert.k,
        "k_min_sq": cert.k_min_sq,
        "xi_max": cert.xi_max,
    }


def cmd_analyze(args) -> int:
    problem, k, _ = parse_problem_file(args.file)
    if not isinstance(problem.control, EllipsoidBound):
        raise ModeMismatch("analyze needs an ellipsoid control bound; "
                           "box-bounded problems are served by verify --mode polytopic")
    split, m_best, h, phi, _ = _gain_pipeline(problem)
    report = stabilizability.decide_stabilizable(phi, problem.demand.R_w)
    cert = ellipsoidal.gain_bounds(
        problem.target.P, problem.demand.R_w, phi, problem.xi, k=k
    )
    doc = {
        "stabilizability": _stabilizability_section(report),
        "gains": _gains_section(split, m_best, h, phi, cert),
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK if report.stabilizable else EXIT_NEGATIVE


def cmd_verify(args) -> int:
    problem, k, _ = parse_problem_file(args.file)
    tol = _verdict_tol()
    is_box = isinstance(problem.control, BoxBound)
    if args.mode == "ellipsoidal" and is_box:
        raise ModeMismatch("problem has a box control bound; use --mode polytopic")
    if args.mode == "polytopic" and not is_box:
        raise ModeMismatch("problem has an ellipsoid control bound; use --mode ellipsoidal")

    split, m_best, h, phi, _ = _gain_pipeline(problem)
    report = stabilizability.decide_stabilizable(phi, problem.demand.R_w)
    cert = ellipsoidal.gain_bounds(
        problem.target.P, problem.demand.R_w, phi, problem.xi, k=k,
        warn=args.mode == "ellipsoidal",
    )
    doc = {
        "stabilizability": _stabilizability_section(report),
        "gains": _gains_section(split, m_best, h, phi, cert),
    }

    if args.mode == "ellipsoidal":
        doc["ellipsoidal"] = {
            "k": cert.k,
            "xi": problem.xi,
            "linear_feasible": cert.linear_ok,
            "saturated_feasible": cert.saturated_ok,
            "target_inside_linear_region": cert.pi_inside_linear_region,
            "gain_lmi": ellipsoidal.gain_matrix_inequality(
                problem.target.P, problem.demand.R_w, cert.k, tol=tol
            ),
            "contains_convergence_ball": ellipsoidal.contains_convergence_ball(
                problem.target.P, problem.demand.R_w, cert.k, tol=tol
            ),
        }
        certified = cert.linear_ok or cert.saturated_ok
    else:
        box = problem.control
        theta_lower = polytopic.theta_lower_bounds(
            cert.k, h, problem.target.P, problem.xi, box
        )
        embedding = polytopic.enumerate_embedding(
            cert.k, h, theta_lower, problem.network
        )
        lmi_cert = polytopic.certify_vertex_lmis(
            problem.target.Q, embedding, problem.demand.R_w, tol=tol
        )
        span = polytopic.sampled_span_check(
            embedding,
            problem.target.Q,
            problem.demand.R_w,
            lmi_cert.alpha_star,
            box,
            samples=args.samples,
            seed=args.seed,
            tol=tol,
        )
        section = {
            "k": cert.k,
            "xi": problem.xi,
            "theta_lower": _tolist(theta_lower),
            "vertex_count": embedding.vertex_count,
            "common_alpha": {
                "feasible": lmi_cert.feasible,
                "alpha_star": lmi_cert.alpha_star,
                "worst_eig": lmi_cert.worst_eig,
            },
            "span_check": {
                "samples": args.samples,
                "seed": args.seed,
                "fractions": {str(j): r.fraction for j, r in sorted(span.items())},
            },
        }
        if embedding.vertex_count <= 64:
            section["A_vertices"] = [_tolist(a) for a in embedding.A_list]
        doc["polytopic"] = section
        certified = lmi_cert.feasible

    print(json.dumps(doc, indent=2))
    return EXIT_OK if certified else EXIT_NEGATIVE


def _default_gain(problem: Problem, k: float | None) -> float:
    if k is not None:
        return k
    k_min_sq, _ = numerics.pencil_max_eig(
        problem.target.P, problem.demand.R_w, names=("P", "R_w")
    )
    return float(np.sqrt(k_min_sq))


def _build_scenario(problem: Problem, k: float | None, sim: dict) -> simulate.Scenario:
    _, _, h, _, _ = _gain_pipeline(problem)
    law = (
        "ellipsoidal-saturated"
        if isinstance(problem.control, EllipsoidBound)
        else "box-saturated"
    )
    if sim["demand"] == "worst":
        demand = simulate.WorstCaseDemand()
    elif sim["demand"] == "constant":
        if "w0" not in sim:
            raise ProblemFileError("constant demand needs w0 in the sim section")
        demand = simulate.ConstantDemand(w0=sim["w0"])
    else:
        demand = simulate.BoundaryRandomDemand(seed=sim["seed"], hold=sim["hold"])
    return simulate.Scenario(
        problem=problem,
        law=law,
        k=_default_gain(problem, k),
        H=h,
        demand=demand,
        dt=sim["dt"],
        t_max=sim["t_max"],
    )


def _write_trajectory(outdir: Path, stem: str, problem: Problem, traj) -> dict:
    n = problem.network.n
    m = problem.network.m
    header = (
        ["t"]
        + [f"x{i+1}" for i in range(n)]
        + [f"u{i+1}" for i in range(m)]
        + [f"w{i+1}" for i in range(n)]
        + ["V"]
    )
    lines = [",".join(header)]
    for t, x, u, w, v in traj.samples():
        row = [t, *x, *u, *w, v]
        lines.append(",".join(format(val, ".17g") for val in row))
    (outdir / f"{stem}.csv").write_text("\n".join(lines) + "\n")
    summary = {
        "converged_at": traj.converged_at,
        "v_monotone_outside": traj.v_monotone_outside,
        "steps": traj.steps,
    }
    (outdir / f"{stem}.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def cmd_simulate(args) -> int:
    outdir = Path(args.output)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ProblemFileError(f"output path not writable: {exc}") from None

    files = [args.file] + (args.batch or [])

    def one(path: str) -> tuple[str, dict]:
        problem, k, sim = parse_problem_file(path)
        if problem.initial is None or problem.initial.x0 is None:
            raise ProblemFileError(f"{path}: simulation needs x0")
        scenario = _build_scenario(problem, k, sim)
        traj = simulate.run(scenario)
        stem = Path(path).stem
        return stem, _write_trajectory(outdir, stem, problem, traj)

    if len(files) == 1:
        stem, summary = one(files[0])
        print(json.dumps({stem: summary}, indent=2))
        return EXIT_OK
    with ThreadPoolExecutor(max_workers=min(len(files), 8)) as pool:
        results = dict(pool.map(one, files))
    print(json.dumps(results, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_approx_error(args) -> int:
    problem, k, _ = parse_problem_file(args.file)
    if not isinstance(problem.control, BoxBound):
        raise ModeMismatch("approx-error needs a box control bound")
    box = problem.control
    split, m_best, h, phi, _ = _gain_pipeline(problem)
    cert = ellipsoidal.gain_bounds(
        problem.target.P, problem.demand.R_w, phi, problem.xi, k=k, warn=False
    )
    theta_lower = polytopic.theta_lower_bounds(
        cert.k, h, problem.target.P, problem.xi, box
    )
    embedding = polytopic.enumerate_embedding(cert.k, h, theta_lower, problem.network)

    results = {}
    for label, vertex, pattern in (
        ("unsaturated", embedding.A_unsaturated, embedding.gammas[0]),
        ("saturated", embedding.A_saturated, embedding.gammas[-1]),
    ):
        try:
            results[label] = approx.min_det_invariant_ellipsoid(
                vertex, problem.demand.R_w
            )
        except UnstableVertex as exc:
            print(
                f"unstable {label} vertex (saturation pattern {_tolist(pattern)}): {exc}",
                file=sys.stderr,
            )
            return EXIT_NEGATIVE

    under, over = results["unsaturated"], results["saturated"]
    doc = {
        "approx_error": {
            "theta_lower": _tolist(theta_lower),
            "Q_unsaturated": _tolist(under.Q),
            "alpha_unsaturated": under.alpha,
            "det_Q_unsaturated": under.det_Q,
            "Q_saturated": _tolist(over.Q),
            "alpha_saturated": over.alpha,
            "det_Q_saturated": over.det_Q,
            "volume_ratio_error": approx.approximation_error(under.Q, over.Q),
            "error_vs_target": approx.error_vs_target(problem.target.P, over.Q),
            "boundary_candidate": True,
            "note": (
                "volume_ratio_error compares the minimum-determinant invariant "
                "ellipsoids of the unsaturated and fully saturated vertices; "
                "error_vs_target compares the target set against the fully "
                "saturated vertex ellipsoid. The two coincide only when the "
                "unsaturated ellipsoid matches the target."
            ),
        }
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invflow",
        description="Stabilizability analysis and saturated-feedback verification "
        "for multi-inventory flow networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="decide stabilizability")
    p_analyze.add_argument("file")
    p_analyze.set_defaults(func=cmd_analyze)

    p_verify = sub.add_parser("verify", help="check convergence certificates")
    p_verify.add_argument("file")
    p_verify.add_argument("--mode", required=True, choices=["ellipsoidal", "polytopic"])
    p_verify.add_argument("--samples", type=int, default=200)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(func=cmd_verify)

    p_sim = sub.add_parser("simulate", help="run the closed loop and export CSV")
    p_sim.add_argument("file")
    p_sim.add_argument("-o", "--output", required=True)
    p_sim.add_argument("--batch", nargs="+", help="additional problem files")
    p_sim.set_defaults(func=cmd_simulate)

    p_err = sub.add_parser("approx-error", help="invariant-ellipsoid volume gap")
    p_err.add_argument("file")
    p_err.set_defaults(func=cmd_approx_error)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ProblemFileError, ModeMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvflowError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
