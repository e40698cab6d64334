"""Command-line front end: JSON jobs in, deterministic reports out.

Four subcommands share one report pipeline.  ``decompose`` and ``check``
read a job file describing either a subspace family or an isometry
diagram; ``analyze-gibbs`` tests a positive distribution against a set of
interaction classes; ``chaos`` prints the Hermite coefficient table of a
monomial.  The exit status encodes the verdict: 0 means pass or
decomposable, 1 means fail or not decomposable (the report carries the
witnesses), 2 means the input was rejected (the report carries a
JSON-pointer path into the offending file).

Reports are reproducible byte for byte: keys are sorted, floats are
printed at 12 significant digits, and the sha256 of every input file is
embedded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import replace

import numpy as np

from .chaos import ChaosError, GaussianModel, hermite_ito, monomial_basis, parse_monomial
from .decomposition import (
    SubspaceFamily,
    check_intersection_property,
    decompose,
    mobius_gaps,
)
from .diagrams import (
    DiagramError,
    IsometryDiagram,
    check_intersection_property_functor,
    decompose_functor,
    naturality_defect,
    validate_diagram,
)
from .gibbs import DiscreteModel, GibbsState, ModelError, factorization_test
from .posets import Poset, PosetError, poset_from_json
from .spaces import AmbientSpace, Tolerance, matrix_from_json, span


class InputError(Exception):
    """Rejected input; pointer locates the offending node inside source."""

    def __init__(self, source: str, pointer: str, message: str):
        super().__init__(f"{source}:{pointer or '/'}: {message}")
        self.source = source
        self.pointer = pointer
        self.message = message


def _pointer(*parts) -> str:
    # RFC 6901 escaping, so ids containing '/' or '~' stay addressable
    return "".join(
        "/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts
    )


# -- input loading -------------------------------------------------------


def _load_json(path: str):
    """Parse a JSON file, returning (object, sha256 hex digest)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(path, "", exc.strerror or str(exc)) from exc
    try:
        return json.loads(raw), hashlib.sha256(raw).hexdigest()
    except json.JSONDecodeError as exc:
        raise InputError(
            path, "", f"invalid JSON: {exc.msg} (line {exc.lineno})"
        ) from exc


def _matrix(src: str, obj, pointer: str) -> np.ndarray:
    """Accept {"dim": [r, c], "data": [...]} or a plain nested list."""
    if isinstance(obj, list):
        try:
            m = np.asarray(obj, dtype=float)
        except ValueError as exc:
            raise InputError(src, pointer, str(exc)) from exc
        if m.ndim != 2:
            raise InputError(src, pointer, "matrix must be two-dimensional")
        return m
    try:
        return matrix_from_json(obj)
    except (ValueError, TypeError) as exc:
        raise InputError(src, pointer, str(exc)) from exc


def _dimension(src: str, value, pointer: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise InputError(src, pointer, "must be a nonnegative integer")
    return value


def _poset(src: str, obj, max_lowersets: int) -> Poset:
    try:
        p = poset_from_json(obj)
        p.count_lower_sets(max_lowersets)
    except PosetError as exc:
        raise InputError(src, "/poset", str(exc)) from exc
    return p


def _family_job(src: str, obj: dict, tol: Tolerance,
                max_lowersets: int) -> SubspaceFamily:
    p = _poset(src, obj.get("poset"), max_lowersets)
    amb = obj.get("ambient")
    if not isinstance(amb, dict) or "dim" not in amb:
        raise InputError(src, "/ambient", "need an object with a 'dim' field")
    dim = _dimension(src, amb["dim"], "/ambient/dim")
    gram = None
    if amb.get("gram") is not None:
        gram = _matrix(src, amb["gram"], "/ambient/gram")
    try:
        ambient = AmbientSpace(dim, gram=gram, tol=tol)
    except ValueError as exc:
        raise InputError(src, "/ambient", str(exc)) from exc
    subs = obj.get("subspaces")
    if not isinstance(subs, dict):
        raise InputError(
            src, "/subspaces",
            "need an object mapping element ids to generator matrices",
        )
    assign = {}
    for name, gen in subs.items():
        ptr = _pointer("subspaces", name)
        if name not in p.index:
            raise InputError(src, ptr, "not an element of the poset")
        m = _matrix(src, gen, ptr)
        if m.shape[0] != ambient.dim:
            raise InputError(
                src, ptr,
                f"generators have {m.shape[0]} rows, "
                f"ambient dimension is {ambient.dim}",
            )
        try:
            assign[name] = span(ambient, m)
        except ValueError as exc:
            raise InputError(src, ptr, str(exc)) from exc
    try:
        return SubspaceFamily(p, ambient, assign)
    except (ValueError, PosetError) as exc:
        raise InputError(src, "/subspaces", str(exc)) from exc


def _diagram_job(src: str, obj: dict, tol: Tolerance, max_lowersets: int):
    """Build and validate an isometry diagram; returns (diagram, report)."""
    p = _poset(src, obj.get("poset"), max_lowersets)
    dims = obj.get("dims")
    if not isinstance(dims, dict):
        raise InputError(
            src, "/dims", "need an object mapping node ids to fiber dimensions"
        )
    for a in p.elements:
        if a not in dims:
            raise InputError(src, "/dims", f"no dimension for node {a!r}")
    for a, d in dims.items():
        ptr = _pointer("dims", a)
        if a not in p.index:
            raise InputError(src, ptr, "not an element of the poset")
        _dimension(src, d, ptr)
    edges_obj = obj.get("edges")
    if not isinstance(edges_obj, dict):
        raise InputError(src, "/edges", "need an object keyed 'b<a' with matrices")
    edges = {}
    for key, val in edges_obj.items():
        ptr = _pointer("edges", key)
        if key.count("<") != 1:
            raise InputError(src, ptr, "edge keys have the form 'b<a'")
        b, a = key.split("<")
        edges[(b, a)] = _matrix(src, val, ptr)
    try:
        d = IsometryDiagram(p, dims, edges, tol=tol)
        vrep = validate_diagram(d)
    except DiagramError as exc:
        raise InputError(src, "/edges", str(exc)) from exc
    except ValueError as exc:
        raise InputError(src, "/dims", str(exc)) from exc
    return d, vrep


def _load_job(args):
    """Dispatch on the job file's kind field."""
    src = args.input
    obj, digest = _load_json(src)
    if not isinstance(obj, dict):
        raise InputError(src, "", "job file must hold a JSON object")
    kind = obj.get("kind")
    if kind == "gibbs":
        raise InputError(
            src, "/kind", "gibbs jobs run through the analyze-gibbs subcommand"
        )
    if kind == "chaos":
        raise InputError(src, "/kind", "chaos jobs run through the chaos subcommand")
    if kind not in ("family", "diagram"):
        raise InputError(src, "/kind", "must be 'family' or 'diagram'")
    tol = _tolerance(args)
    if kind == "family":
        built = _family_job(src, obj, tol, args.max_lowersets)
    else:
        built = _diagram_job(src, obj, tol, args.max_lowersets)
    return kind, built, digest


def _tolerance(args) -> Tolerance:
    fields = {
        "rank": getattr(args, "tol_rank", None),
        "proj": getattr(args, "tol_proj", None),
        "eq": getattr(args, "tol_eq", None),
    }
    given = {k: v for k, v in fields.items() if v is not None}
    return replace(Tolerance(), **given) if given else Tolerance()


# -- report assembly -----------------------------------------------------


def _witness_rows(witnesses) -> list:
    return [{"a": str(a), "b": str(b), "gap": float(g)} for a, b, g in witnesses]


def _fiber_witness_rows(witnesses) -> list:
    return [
        {"fiber": str(f), "a": str(a), "b": str(b), "gap": float(g)}
        for f, a, b, g in witnesses
    ]


def _tol_fields(tol: Tolerance) -> dict:
    return {"rank": tol.rank, "orth": tol.orth, "proj": tol.proj, "eq": tol.eq}


def _run_decompose(args):
    kind, built, digest = _load_job(args)
    tol = _tolerance(args)
    report = {
        "command": "decompose",
        "kind": kind,
        "input_sha256": {"input": digest},
        "tolerance": _tol_fields(tol),
    }
    if kind == "family":
        fam = built
        res = decompose(fam)
        report["verdict"] = "decomposable" if res.ok else "not-decomposable"
        report["intersection_property"] = {
            "holds": res.report.holds,
            "witnesses": _witness_rows(res.report.witnesses),
        }
        report["failed_at"] = None if res.failed_at is None else str(res.failed_at)
        report["orthogonality_defects"] = _witness_rows(res.orthogonality_defects)
        if res.ok:
            dec = res.decomposition
            report["piece_dims"] = {
                str(a): dec.pieces[a].dim for a in dec.poset_plus.elements
            }
            gaps = mobius_gaps(fam, dec)
            report["mobius_vs_orthogonal"] = {
                "per_element": {str(a): float(g) for a, g in gaps.items()},
                "max_gap": float(max(gaps.values(), default=0.0)),
            }
        return report, 0 if res.ok else 1
    d, vrep = built
    res = decompose_functor(d)
    report["verdict"] = "decomposable" if res.ok else "not-decomposable"
    report["intersection_property"] = {
        "holds": res.report.holds,
        "witnesses": _fiber_witness_rows(res.report.witnesses),
    }
    report["problem"] = res.problem
    report["functor"] = {
        "max_isometry_defect": vrep["max_isometry_defect"],
        "max_functoriality_defect": vrep["max_functoriality_defect"],
    }
    if res.ok:
        fd = res.decomposition
        report["piece_dims"] = {str(c): int(n) for c, n in fd.piece_dims.items()}
        report["naturality_gap"] = float(naturality_defect(d, fd))
    return report, 0 if res.ok else 1


def _run_check(args):
    kind, built, digest = _load_job(args)
    tol = _tolerance(args)
    report = {
        "command": "check",
        "kind": kind,
        "input_sha256": {"input": digest},
        "tolerance": _tol_fields(tol),
    }
    if kind == "family":
        rep = check_intersection_property(built)
        report["verdict"] = "pass" if rep.holds else "fail"
        report["holds"] = rep.holds
        report["witnesses"] = _witness_rows(rep.witnesses)
        return report, 0 if rep.holds else 1
    d, vrep = built
    rep = check_intersection_property_functor(d)
    report["verdict"] = "pass" if rep.holds else "fail"
    report["holds"] = rep.holds
    report["witnesses"] = _fiber_witness_rows(rep.witnesses)
    report["functor"] = {
        "max_isometry_defect": vrep["max_isometry_defect"],
        "max_functoriality_defect": vrep["max_functoriality_defect"],
    }
    return report, 0 if rep.holds else 1


def _run_gibbs(args):
    tol = _tolerance(args)
    model_obj, h_model = _load_json(args.model)
    if not isinstance(model_obj, dict) or "variables" not in model_obj:
        raise InputError(args.model, "", "need an object with a 'variables' field")
    variables = model_obj["variables"]
    if isinstance(variables, list):
        variables = [tuple(v) if isinstance(v, list) else v for v in variables]
    elif not isinstance(variables, dict):
        raise InputError(
            args.model, "/variables",
            "must be an object or a list of [name, size] pairs",
        )
    try:
        model = DiscreteModel(variables, tol=tol)
    except (ModelError, ValueError, TypeError) as exc:
        raise InputError(args.model, "/variables", str(exc)) from exc

    dist_obj, h_dist = _load_json(args.dist)
    if not isinstance(dist_obj, list):
        raise InputError(
            args.dist, "",
            "must be a flat list of probabilities, first variable slowest",
        )
    try:
        probs = np.asarray(dist_obj, dtype=float)
    except ValueError as exc:
        raise InputError(args.dist, "", str(exc)) from exc
    try:
        state = GibbsState(model, probs)
    except (ModelError, ValueError) as exc:
        raise InputError(args.dist, "", str(exc)) from exc

    classes_obj, h_classes = _load_json(args.classes)
    if not isinstance(classes_obj, list):
        raise InputError(args.classes, "", "must be a list of variable-name lists")
    for i, cls in enumerate(classes_obj):
        if not (isinstance(cls, list) and all(isinstance(s, str) for s in cls)):
            raise InputError(args.classes, _pointer(i), "must be a list of variable names")
    try:
        rep = factorization_test(state, classes_obj)
    except (ModelError, ValueError) as exc:
        raise InputError(args.classes, "", str(exc)) from exc

    report = {
        "command": "analyze-gibbs",
        "input_sha256": {"model": h_model, "dist": h_dist, "classes": h_classes},
        "verdict": "factorizes" if rep.holds else "does-not-factorize",
        "holds": rep.holds,
        "threshold": float(rep.threshold),
        "max_off_class_norm": float(rep.max_off_norm),
        "class_ids": [str(a) for a in rep.class_ids],
        "off_class": [str(a) for a in rep.off_class],
        "piece_norms": {str(a): float(v) for a, v in rep.norms.items()},
    }
    return report, 0 if rep.holds else 1


def _monomial_name(sites) -> str:
    return "*".join(f"s{i + 1}" for i in sites) if sites else "1"


def _run_chaos(args):
    tol = _tolerance(args)
    if args.sites < 1:
        raise InputError("--sites", "", "must be a positive integer")
    if args.max_degree < 0:
        raise InputError("--max-degree", "", "must be nonnegative")
    cov_obj, h_cov = _load_json(args.cov)
    cov = _matrix(args.cov, cov_obj, "")
    if cov.shape != (args.sites, args.sites):
        raise InputError(
            args.cov, "",
            f"covariance must be {args.sites}x{args.sites}, "
            f"got {cov.shape[0]}x{cov.shape[1]}",
        )
    try:
        model = GaussianModel(cov, tol=tol)
    except ChaosError as exc:
        raise InputError(args.cov, "", str(exc)) from exc
    try:
        x = parse_monomial(args.expand, args.sites)
    except ChaosError as exc:
        raise InputError("--expand", "", str(exc)) from exc
    try:
        coeffs = hermite_ito(model, x, max_degree=args.max_degree)
    except ChaosError as exc:
        raise InputError("--max-degree", "", str(exc)) from exc
    basis = monomial_basis(args.sites, args.max_degree)
    report = {
        "command": "chaos",
        "input_sha256": {"cov": h_cov},
        "sites": args.sites,
        "max_degree": args.max_degree,
        "monomial": _monomial_name(x),
        "coefficients": [
            {"monomial": _monomial_name(m), "value": float(c)}
            for m, c in zip(basis, coeffs)
        ],
    }
    return report, 0


# -- rendering -----------------------------------------------------------


def _round_floats(value):
    """Pin every float to 12 significant digits for stable output."""
    if isinstance(value, bool):
        return value
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.12g}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, dict):
        return {str(k): _round_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_floats(v) for v in value]
    return value


def _render(report: dict, fmt: str) -> str:
    rounded = _round_floats(report)
    if fmt == "json":
        return json.dumps(rounded, sort_keys=True, indent=2)
    lines: list[str] = []

    def emit(path: str, value) -> None:
        if isinstance(value, dict):
            if not value:
                lines.append(f"{path}: (none)")
                return
            for k in sorted(value, key=str):
                emit(f"{path}.{k}" if path else str(k), value[k])
        elif isinstance(value, list):
            if not value:
                lines.append(f"{path}: (none)")
                return
            for i, item in enumerate(value):
                emit(f"{path}[{i}]", item)
        else:
            lines.append(f"{path}: {value}")

    emit("", rounded)
    return "\n".join(lines)


# -- entry point ---------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interdecomp",
        description="Interaction decomposition toolkit: decide decomposability "
        "of subspace families and isometry diagrams, test distributions for "
        "factorization, expand monomials in the Hermite basis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=("json", "text"), default="json",
                       help="report format (default json)")
        p.add_argument("--tol-rank", type=float, default=None,
                       help="override the numerical rank threshold")
        p.add_argument("--tol-proj", type=float, default=None,
                       help="override the projector comparison threshold")
        p.add_argument("--tol-eq", type=float, default=None,
                       help="override the operator equality threshold")

    def job_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True,
                       help="job file: {\"kind\": \"family\"|\"diagram\", ...}")
        p.add_argument("--max-lowersets", type=int, default=4096,
                       help="refuse posets with more lower sets than this")

    p = sub.add_parser("decompose",
                       help="decide decomposability and emit the pieces")
    job_flags(p)
    common(p)
    p.set_defaults(handler=_run_decompose)

    p = sub.add_parser("check",
                       help="pairwise intersection-property check only")
    job_flags(p)
    common(p)
    p.set_defaults(handler=_run_check)

    p = sub.add_parser("analyze-gibbs",
                       help="test a positive distribution against interaction classes")
    p.add_argument("--model", required=True,
                   help="model file: {\"variables\": {name: size, ...}}")
    p.add_argument("--dist", required=True,
                   help="flat probability list, first variable slowest")
    p.add_argument("--classes", required=True,
                   help="list of variable-name lists")
    common(p)
    p.set_defaults(handler=_run_gibbs)

    p = sub.add_parser("chaos",
                       help="Hermite coefficient table for a monomial")
    p.add_argument("--sites", type=int, required=True,
                   help="number of Gaussian sites")
    p.add_argument("--cov", required=True,
                   help="covariance matrix file")
    p.add_argument("--max-degree", type=int, required=True,
                   help="chaos filtration depth")
    p.add_argument("--expand", required=True,
                   help="monomial like 's1*s1*s2', or '1' for the constant")
    common(p)
    p.set_defaults(handler=_run_chaos)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        report, code = args.handler(args)
    except InputError as exc:
        report = {
            "command": args.command,
            "error": {
                "source": exc.source,
                "pointer": exc.pointer,
                "message": exc.message,
            },
        }
        code = 2
    print(_render(report, args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
