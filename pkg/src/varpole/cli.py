"""Command-line front end: ``varpole {analyze,laurent,generate,simulate,verify}``.

Model files are JSON objects::

    {"n": 2, "K": 1, "form": "var", "coeffs": [[[0.5, 0.5], [0.5, 0.5]]],
     "tolerances": {"rank_rel": 1e-10}}

``form = "general"`` lists A_0..A_K; ``form = "var"`` lists the lag matrices
A_1..A_K of A(z) = I - sum_k A_k z^k.  Matrices are row-major nested lists.

Exit codes: 0 all checks pass, 1 input error, 2 a verification failed,
3 the pole order exceeds the supported maximum.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .coint import compute_P, xi_variant_ranks
from .laurent import (
    ContourError,
    ConvergenceError,
    ReconstructionError,
    annihilation_check,
    contour_coefficients,
    growth_exponent,
    default_radius,
    toeplitz_reconstruct,
    verify_fundamental_identities,
)
from .matpoly import MatrixPolynomial, det_roots, from_var, var_lags
from .numla import DEFAULT_TOL, Tolerances, penrose_residuals
from .polecore import MAX_ORDER, UnsupportedOrderError, decomposition_check, detect_pole_order
from .simkit import SmithSpec, generate_smith_model, integration_diagnostics, simulate_var

SCHEMA = 1
EXIT_OK, EXIT_INPUT, EXIT_FAIL, EXIT_ORDER = 0, 1, 2, 3

# verification tolerances applied to the oracle comparisons
CHECK_TOL = {
    "leading_matrix": 1e-8,
    "identities": 1e-8,
    "annihilation": 1e-8,
    "oracle_doubling": 1e-8,
    "radius_halving": 1e-8,
    "imag_leak": 1e-9,
    "toeplitz": 1e-7,
    "decomposition": 1e-8,
}


class ModelFileError(ValueError):
    """Malformed model file; the message names the offending location."""


# ---------------------------------------------------------------------------
# model files


def _matrix(obj, n: int, where: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != n:
        raise ModelFileError(f"{where}: expected a list of {n} rows")
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != n:
            raise ModelFileError(f"{where}[{i}]: expected {n} entries")
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ModelFileError(f"{where}[{i}][{j}]: expected a finite number, got {v!r}")
        rows.append([float(v) for v in row])
    return np.array(rows)


def parse_model(data: dict) -> tuple[MatrixPolynomial, dict]:
    """MatrixPolynomial and tolerance overrides from a decoded model file."""
    if not isinstance(data, dict):
        raise ModelFileError("top level: expected a JSON object")
    for key in ("n", "K", "form", "coeffs"):
        if key not in data:
            raise ModelFileError(f"top level: missing field '{key}'")
    n, K, form = data["n"], data["K"], data["form"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ModelFileError("n: expected a positive integer")
    if not isinstance(K, int) or isinstance(K, bool) or K < 0:
        raise ModelFileError("K: expected a non-negative integer")
    if form not in ("general", "var"):
        raise ModelFileError(f"form: expected 'general' or 'var', got {form!r}")
    count = K + 1 if form == "general" else K
    coeffs = data["coeffs"]
    if not isinstance(coeffs, list) or len(coeffs) != count:
        raise ModelFileError(f"coeffs: expected {count} matrices for form '{form}' with K = {K}")
    mats = [_matrix(c, n, f"coeffs[{k}]") for k, c in enumerate(coeffs)]
    if form == "general":
        P = MatrixPolynomial(np.stack(mats))
    else:
        P = from_var(mats) if mats else MatrixPolynomial(np.eye(n)[None])
    tol = data.get("tolerances", {}) or {}
    if not isinstance(tol, dict):
        raise ModelFileError("tolerances: expected an object")
    unknown = set(tol) - {"rank_rel", "nonsing_rel", "residual_abs"}
    if unknown:
        raise ModelFileError(f"tolerances: unknown keys {sorted(unknown)}")
    return P, tol


def load_model(path) -> tuple[MatrixPolynomial, dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFileError(f"{path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return parse_model(data)
    except ModelFileError as exc:
        raise ModelFileError(f"{path}: {exc}") from exc


def model_to_json(P: MatrixPolynomial, **extra) -> dict:
    """Model file object; VAR form when A_0 = I."""
    if P.is_var and P.degree >= 1:
        out = {"n": P.dim, "K": P.degree, "form": "var",
               "coeffs": [a.tolist() for a in var_lags(P)]}
    else:
        out = {"n": P.dim, "K": P.degree, "form": "general",
               "coeffs": [a.tolist() for a in P.coeffs]}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# analysis pipeline


def _verdict(residual: float, tol: float, warn_only: bool = False) -> dict:
    ok = bool(residual <= tol)
    status = "pass" if ok else ("warn" if warn_only else "fail")
    # non-finite residuals (e.g. a failed halving contour) are reported as null
    return {"status": status, "residual": float(residual) if math.isfinite(residual) else None,
            "tol": tol}


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def _mats(ms) -> list:
    return [np.asarray(M).tolist() for M in ms]


def analyze_model(P: MatrixPolynomial, tol: Tolerances = DEFAULT_TOL, radius: float | None = None,
                  nodes: int = 256, max_order: int = MAX_ORDER, full: bool = False) -> tuple[dict, int]:
    """Run the whole pipeline; returns the report and its exit code.

    ``full`` adds the checks of ``verify``: radius halving, the contour
    growth-rate pole order, Penrose residuals of A(1)^+ and idempotency.
    """
    report: dict = {"schema": SCHEMA, "n": P.dim, "K": P.degree}
    verdicts: dict[str, dict] = {}
    report["verdicts"] = verdicts
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        roots = det_roots(P)
        try:
            pr = detect_pole_order(P, tol, max_order=max_order)
        except UnsupportedOrderError as exc:
            report["error"] = str(exc)
            report["warnings"] = sorted({str(w.message) for w in caught})
            return report, EXIT_ORDER
    report["warnings"] = sorted({str(w.message) for w in caught} | set(roots.warnings))
    m = pr.m
    report.update({"m": m, "mu": pr.mu, "premise_ok": roots.premise_ok,
                   "K_singular_values": pr.K_singular_values()})
    # residual: number of non-unit roots on or inside the unit circle
    inside = sum(k for r, k in roots.roots if r != 1 and abs(r) <= 1 + 1e-6)
    verdicts["premise"] = {"status": "pass" if roots.premise_ok else "warn",
                           "residual": float(inside), "tol": 0.0}
    if m == 0:
        report["summary"] = "no unit-root pole: A(1) is nonsingular"

    coint = compute_P(pr, tol=tol)
    report.update({"P": coint.P.tolist(), "rank": coint.rank,
                   "closed_form_rank": coint.closed_form_rank,
                   "rank_formula_terms": coint.rank_formula_terms, "notes": list(coint.notes)})
    verdicts["rank"] = _verdict(abs(coint.rank - coint.closed_form_rank), 0)
    verdicts["idempotency"] = _verdict(coint.idempotency_residual, tol.residual_abs)
    if m >= 2:
        verdicts["bordered_form"] = _verdict(coint.bordered_gap, tol.residual_abs)
    if m == 4:
        with_ap, without_ap = xi_variant_ranks(pr, tol)
        report["xi_variant_ranks"] = {"with_A_pinv": with_ap, "without_A_pinv": without_ap}
        verdicts["xi_variants"] = _verdict(abs(with_ap - without_ap), 0, warn_only=True)

    jmax = max(m, 1)
    try:
        rad = default_radius(P) if radius is None else radius
        exp = contour_coefficients(P, j_min=-max(m, 1) - 1, j_max=jmax, radius=rad, nodes=nodes)
    except (ContourError, ConvergenceError) as exc:
        report["error"] = f"contour oracle: {exc}"
        verdicts["oracle"] = {"status": "fail", "residual": None, "tol": 0.0}
        return report, EXIT_FAIL
    report["oracle"] = {"radius": exp.radius, "nodes": exp.nodes, "imag_leak": exp.imag_leak,
                        "change_on_doubling": exp.change_on_doubling, "detected_m": exp.m}
    verdicts["oracle_order"] = _verdict(abs(exp.m - m), 0)
    verdicts["oracle_doubling"] = _verdict(exp.change_on_doubling, CHECK_TOL["oracle_doubling"])
    verdicts["imag_leak"] = _verdict(exp.imag_leak, CHECK_TOL["imag_leak"])
    exp = exp.with_pole_order(m)
    ids = verify_fundamental_identities(exp, P, h_max=2 * m if m else jmax)
    verdicts["identities"] = _verdict(ids.max_relative, CHECK_TOL["identities"])

    if m >= 1:
        principal = exp.principal
        report["principal"] = _mats(principal)
        report["closed_form_leading"] = pr.n_leading.tolist()
        lead_err = np.linalg.norm(pr.n_leading - principal[0]) / np.linalg.norm(principal[0])
        verdicts["leading_matrix"] = _verdict(lead_err, CHECK_TOL["leading_matrix"])
        verdicts["annihilation"] = _verdict(annihilation_check(coint.P, exp).max_residual,
                                            CHECK_TOL["annihilation"])
        try:
            rec = toeplitz_reconstruct(P, m, tol=tol)
            terr = (np.linalg.norm(np.stack(rec.principal) - np.stack(principal))
                    / np.linalg.norm(np.stack(principal)))
            verdicts["toeplitz"] = _verdict(terr, CHECK_TOL["toeplitz"])
        except ReconstructionError as exc:
            report["notes"].append(str(exc))
            verdicts["toeplitz"] = {"status": "fail", "residual": None, "tol": CHECK_TOL["toeplitz"]}
    if m >= 2:
        dec = decomposition_check(P, pr, exp.principal)
        verdicts["decomposition"] = _verdict(max(d.relative for d in dec), CHECK_TOL["decomposition"])

    if full:
        try:
            half = contour_coefficients(P, j_min=exp.j_min, j_max=exp.j_max, radius=exp.radius / 2,
                                        nodes=nodes)
            sc = float(np.max(np.linalg.norm(exp.coeffs, axis=(1, 2))))
            diff = float(np.max(np.linalg.norm(half.coeffs - exp.coeffs, axis=(1, 2)))) / sc
        except (ContourError, ConvergenceError):
            diff = math.inf
        verdicts["radius_halving"] = _verdict(diff, CHECK_TOL["radius_halving"])
        r = min(1e-2, 0.05 * exp.radius)
        g = growth_exponent(P, (r, r / 2))
        report["growth_exponent"] = g
        verdicts["growth_order"] = _verdict(abs(max(0, round(g)) - m), 0)
        verdicts["penrose"] = _verdict(max(penrose_residuals(pr.derivs[0], pr.A_pinv)),
                                       tol.residual_abs)

    failed = sorted(k for k, v in verdicts.items() if v["status"] == "fail")
    report["failed"] = failed
    return report, EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# output


def _fmt_matrix(M, indent: str = "    ") -> str:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return "\n".join(indent + "  ".join(f"{v: .6g}" for v in row) for row in M)


def pretty_report(rep: dict) -> str:
    lines = []
    if "m" not in rep:
        return f"error: {rep.get('error', 'analysis failed')}"
    lines.append(f"pole order m = {rep['m']}   unit-root multiplicity = {rep['mu']}")
    if rep.get("summary"):
        lines.append(rep["summary"])
    for w in rep.get("warnings", []):
        lines.append(f"warning: {w}")
    lines.append(f"cointegration rank = {rep['rank']} (closed form {rep['closed_form_rank']})")
    lines.append("P_m =")
    lines.append(_fmt_matrix(rep["P"]))
    for j, N in enumerate(rep.get("principal", [])):
        lines.append(f"N_{-rep['m'] + j} =")
        lines.append(_fmt_matrix(N))
    lines.append("checks:")
    for k, v in rep["verdicts"].items():
        res = "n/a" if v["residual"] is None else f"{v['residual']:.3g}"
        lines.append(f"  {k:<16} {v['status']:<5} residual {res} (tol {v['tol']:.3g})")
    if rep.get("error"):
        lines.append(f"error: {rep['error']}")
    return "\n".join(lines)


def _emit(obj: dict, fmt: str, out=None, pretty=None) -> None:
    text = json.dumps(obj, indent=2) if fmt == "json" else (pretty or json.dumps)(obj)
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n")


# ---------------------------------------------------------------------------
# commands


def _tolerances(args, overrides: dict) -> Tolerances:
    vals = {"rank_rel": DEFAULT_TOL.rank_rel, "nonsing_rel": DEFAULT_TOL.nonsing_rel,
            "residual_abs": DEFAULT_TOL.residual_abs}
    vals.update(overrides)
    if args.tol_rank is not None:
        vals["rank_rel"] = args.tol_rank
    if args.tol_nonsing is not None:
        vals["nonsing_rel"] = args.tol_nonsing
    return Tolerances(**vals)


def _analyze_path(path, args, full: bool) -> tuple[dict, int]:
    P, over = load_model(path)
    tol = _tolerances(args, over)
    rep, code = analyze_model(P, tol, args.radius, args.nodes, args.max_order, full=full)
    rep["model"] = str(path)
    return rep, code


def _batch_one(job):
    path, out, args, full = job
    try:
        rep, code = _analyze_path(path, args, full)
    except (ModelFileError, ValueError) as exc:
        rep, code = {"schema": SCHEMA, "model": str(path), "error": str(exc)}, EXIT_INPUT
    Path(out).write_text(json.dumps(rep, indent=2) + "\n")
    return str(path), code


def cmd_analyze(args, full: bool = False) -> int:
    if args.batch:
        src = Path(args.batch)
        if not src.is_dir():
            print(f"error: {src} is not a directory", file=sys.stderr)
            return EXIT_INPUT
        dest = Path(args.out) if args.out else src
        dest.mkdir(parents=True, exist_ok=True)
        jobs = [(p, dest / f"{p.stem}.report.json", args, full)
                for p in sorted(src.glob("*.json")) if not p.name.endswith(".report.json")]
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                results = list(pool.map(_batch_one, jobs))
        else:
            results = [_batch_one(j) for j in jobs]
        for name, code in results:
            print(f"{name}: exit {code}")
        return max((c for _, c in results), default=EXIT_OK)
    if not args.model:
        print("error: a model path or --batch DIR is required", file=sys.stderr)
        return EXIT_INPUT
    try:
        rep, code = _analyze_path(args.model, args, full)
    except ModelFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(rep, args.format, args.out, pretty_report)
    return code


def cmd_verify(args) -> int:
    return cmd_analyze(args, full=True)


def cmd_laurent(args) -> int:
    try:
        P, _ = load_model(args.model)
    except ModelFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        exp = contour_coefficients(P, j_min=args.order_min, j_max=args.order_max,
                                   radius=args.radius, nodes=args.nodes)
    except (ContourError, ConvergenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = {"schema": SCHEMA, "m": exp.m, "radius": exp.radius, "nodes": exp.nodes,
           "imag_leak": exp.imag_leak, "change_on_doubling": exp.change_on_doubling,
           "coefficients": {str(j): exp.coefficient(j).tolist()
                            for j in range(exp.j_min, exp.j_max + 1)}}

    def pretty(o):
        head = (f"m = {o['m']}  radius = {o['radius']:.4g}  nodes = {o['nodes']}  "
                f"imag_leak = {o['imag_leak']:.3g}  change_on_doubling = {o['change_on_doubling']:.3g}")
        body = [f"N_{j} =\n{_fmt_matrix(M)}" for j, M in o["coefficients"].items()]
        return "\n".join([head, *body])

    _emit(out, args.format, args.out, pretty)
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def cmd_generate(args) -> int:
    degrees = sorted(args.degrees, reverse=True)
    n = args.n if args.n is not None else len(degrees)
    try:
        spec = SmithSpec(n, tuple(degrees), seed=args.seed if args.seed is not None else 0,
                         unimodular_degree=args.unimodular_degree, n_ops=args.n_ops)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    P, known = generate_smith_model(spec)
    obj = model_to_json(P, known_m=known, degrees=list(spec.degrees), seed=spec.seed)
    if args.out_path:
        Path(args.out_path).write_text(json.dumps(obj, indent=2) + "\n")
    else:
        print(json.dumps(obj, indent=2))
    return EXIT_OK


def _sigma(text: str | None, n: int) -> np.ndarray:
    if text is None:
        return np.eye(n)
    try:
        return float(text) * np.eye(n)
    except ValueError:
        pass
    try:
        data = json.loads(Path(text).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"--sigma: expected a number or a JSON matrix file ({exc})") from exc
    return _matrix(data, n, "sigma")


def cmd_simulate(args) -> int:
    try:
        P, over = load_model(args.model)
        Sigma = _sigma(args.sigma, P.dim)
        traj = simulate_var(P, args.T, Sigma, args.seed)
    except (ModelFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    with open(args.out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *[f"y{i + 1}" for i in range(P.dim)]])
        for t, row in enumerate(traj.values, start=1):
            w.writerow([t, *map(repr, row.tolist())])
    tol = _tolerances(args, over)
    try:
        pr = detect_pole_order(P, tol, max_order=args.max_order)
    except UnsupportedOrderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORDER
    Pm = compute_P(pr, tol=tol).P
    diag = integration_diagnostics(traj, pr.m, Pm)
    summary = {
        "schema": SCHEMA, "T": args.T, "seed": args.seed, "m": pr.m,
        "threshold": diag.threshold, "windows": diag.windows.tolist(),
        "differences": [{"order": d, "max_slope": _finite(v.max_slope),
                         "slopes": [_finite(x) for x in v.slopes.tolist()],
                         "stationary": v.stationary, "confident": v.confident}
                        for d, v in enumerate(diag.differences)],
        "projected": None if diag.projected is None else {
            "max_slope": _finite(diag.projected.max_slope), "stationary": diag.projected.stationary,
            "confident": diag.projected.confident},
        "estimated_order": diag.estimated_order, "consistent": diag.consistent,
        "notes": list(diag.notes),
    }
    diag_path = args.diagnostics or str(Path(args.out_path).with_suffix(".diagnostics.json"))
    Path(diag_path).write_text(json.dumps(summary, indent=2) + "\n")
    if args.format == "pretty":
        print(f"wrote {args.T} rows to {args.out_path}; diagnostics in {diag_path}")
        for d in summary["differences"]:
            tag = "stationary" if d["stationary"] else "non-stationary"
            slope = "n/a" if d["max_slope"] is None else f"{d['max_slope']:.3f}"
            print(f"  diff {d['order']}: max slope {slope} -> {tag}")
    else:
        print(json.dumps(summary, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-rank", type=float, default=None, help="relative rank cutoff")
    p.add_argument("--tol-nonsing", type=float, default=None, help="K_i nonsingularity threshold")
    p.add_argument("--radius", type=float, default=None, help="contour radius (default: automatic)")
    p.add_argument("--nodes", type=int, default=256, help="initial quadrature nodes (power of two)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-order", type=int, default=MAX_ORDER, choices=range(1, MAX_ORDER + 1),
                   help="largest pole order to search for (at most 4)")
    p.add_argument("--format", choices=("json", "pretty"), default="json")


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors (exit 1); exit 2 means a failed verification
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="varpole", description="Pole order, Laurent coefficients and cointegration "
                 "projectors of A^{-1}(z) at z = 1.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, helptext in (("analyze", "pole order, Laurent principal part, cointegration projector"),
                           ("verify", "analyze plus the full invariant suite")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("model", nargs="?")
        p.add_argument("--batch", metavar="DIR", help="analyze every *.json model in DIR")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for --batch")
        p.add_argument("--out", help="report file (or report directory with --batch)")
        _common(p)

    p = sub.add_parser("laurent", help="dump contour-oracle Laurent coefficients")
    p.add_argument("model")
    p.add_argument("--order-min", type=int, default=-4)
    p.add_argument("--order-max", type=int, default=2)
    p.add_argument("--out")
    _common(p)

    p = sub.add_parser("generate", help="write a Smith-form model with known pole order")
    p.add_argument("out_path", nargs="?")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--degrees", type=_int_list, required=True, help="e.g. 2,1,0")
    p.add_argument("--unimodular-degree", type=int, default=1)
    p.add_argument("--n-ops", type=int, default=None)
    _common(p)

    p = sub.add_parser("simulate", help="simulate a VAR model, write CSV and diagnostics")
    p.add_argument("model")
    p.add_argument("out_path")
    p.add_argument("--T", type=int, default=2000)
    p.add_argument("--sigma", default=None, help="scalar s for s*I, or a JSON matrix file")
    p.add_argument("--diagnostics", default=None, help="diagnostics JSON path")
    _common(p)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"analyze": cmd_analyze, "verify": cmd_verify, "laurent": cmd_laurent,
               "generate": cmd_generate, "simulate": cmd_simulate}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
