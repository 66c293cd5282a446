"""Command-line checks for the so(1,n) bundle calculus and rigidity computations.

Subcommands: identities, cohomology, modelform, weitzenbock, bvp, documents.

Every command prints (or writes with ``--out``) a JSON report with sorted keys
and floats rounded to 10 significant digits, so identical inputs give identical
bytes. Exit status: 0 when every verdict passes, 1 on a failed verdict, 2 on
an invalid document.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__

RATIONAL = {"oneOf": [{"type": "string", "pattern": r"^-?\d+(/\d+)?$"}, {"type": "number"}]}
DECIMAL = {"oneOf": [{"type": "string", "pattern": r"^-?\d+(\.\d+)?([eE]-?\d+)?$"}, {"type": "number"}]}
EXPECTED = {"type": "object", "additionalProperties": {
    "type": "object", "required": ["value", "provenance"],
    "properties": {"provenance": {"type": "string"}}}}

SCHEMAS = {
    "presentation": {
        "type": "object",
        "required": ["kind", "n", "generators", "relators", "matrices"],
        "properties": {
            "kind": {"const": "presentation"},
            "n": {"type": "integer", "minimum": 2},
            "generators": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "relators": {"type": "array", "items": {"type": "array", "items": {"type": "integer"},
                                                     "minItems": 1}},
            "matrices": {"type": "array", "items": {"type": "array", "items": {
                "type": "array", "items": RATIONAL}}},
            "bending": {"type": "object", "required": ["A", "B", "C", "X"]},
            "expected": EXPECTED,
        },
    },
    "bend_field": {
        "type": "object",
        "required": ["kind", "m", "quadratic_differential"],
        "properties": {
            "kind": {"const": "bend_field"},
            "m": {"const": 2},
            "quadratic_differential": {"type": "array", "items": {
                "type": "array", "items": DECIMAL, "minItems": 2, "maxItems": 2}},
            "sample_points": {"type": "integer", "minimum": 1},
            "sample_radius": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.9},
            "h": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                  "minItems": 2, "maxItems": 2},
            "patch": {"type": "object", "required": ["nodes", "half_width", "depth"]},
            "compact_support": {"type": "object", "required": ["nodes", "half_width", "depth"]},
            "expected": EXPECTED,
        },
    },
    "strip": {
        "type": "object",
        "required": ["kind", "m", "nodes"],
        "properties": {
            "kind": {"const": "strip"},
            "m": {"type": "integer", "minimum": 1, "maximum": 4},
            "nodes": {"type": "integer", "minimum": 4},
            "depth": {"type": "number", "exclusiveMinimum": 0},
            "half_width": {"type": "number", "exclusiveMinimum": 0},
            "mms_nodes": {"type": "array", "items": {"type": "integer", "minimum": 5},
                          "minItems": 2, "maxItems": 2},
            "green": {"type": "object", "required": ["m", "nodes"]},
            "expected": EXPECTED,
        },
    },
    "symbol": {
        "type": "object",
        "required": ["kind"],
        "properties": {
            "kind": {"const": "symbol"},
            "dimensions": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "random_count": {"type": "integer", "minimum": 0},
            "zetas": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                                  "minItems": 1}},
            "expected": EXPECTED,
        },
    },
}

COMMAND_KINDS = {
    "cohomology": ("presentation",),
    "modelform": ("bend_field",),
    "weitzenbock": ("bend_field",),
    "bvp": ("strip", "symbol"),
}


class DocumentError(ValueError):
    """Schema violation, with a JSON path to the offending value."""


# ---------------------------------------------------------------------------
# documents and reports

def shipped_documents() -> list:
    return sorted(p.name for p in resources.files("hyprigid").joinpath("documents").iterdir()
                  if p.name.endswith(".json"))


def load_document(ref: str) -> dict:
    """Read a document from a path, or by name from the shipped corpus."""
    path = Path(ref)
    if path.exists():
        text = path.read_text()
    else:
        name = ref if ref.endswith(".json") else ref + ".json"
        res = resources.files("hyprigid").joinpath("documents", name)
        if not res.is_file():
            raise DocumentError(f"no such document: {ref} (shipped: {', '.join(shipped_documents())})")
        text = res.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"$: not valid JSON ({exc})") from exc
    return doc


def validate(doc, kinds) -> None:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DocumentError("$.kind: missing document kind")
    if doc["kind"] not in kinds:
        raise DocumentError(f"$.kind: expected one of {list(kinds)}, got {doc['kind']!r}")
    validator = jsonschema.Draft202012Validator(SCHEMAS[doc["kind"]])
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise DocumentError(f"{path}: {err.message}")


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            return str(v)
        return float(f"{v:.10g}")
    return obj


def digest(payload) -> str:
    text = json.dumps(_canonical(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


class Report:
    def __init__(self, command: str, inputs: dict):
        self.command = command
        self.inputs = inputs
        self.checks = {}
        self.data = {}

    def check(self, name, value, passed, tolerance, provenance):
        self.checks[name] = {"value": value, "pass": bool(passed), "tolerance": tolerance,
                             "provenance": provenance}

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks.values())

    def as_dict(self) -> dict:
        return _canonical({
            "command": self.command,
            "version": __version__,
            "inputs": self.inputs,
            "inputs_digest": digest(self.inputs),
            "checks": self.checks,
            "data": self.data,
            "pass": self.passed,
        })

    def dumps(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# commands

def cmd_identities(args) -> Report:
    from .identities import run_identity_suite, section_laplacian_correspondence

    n = args.dimension or 4
    rep = Report("identities", {"dimension": n, "backend": args.backend, "seed": args.seed})
    suite = run_identity_suite(n, args.backend, args.seed)
    for name, c in suite["checks"].items():
        rep.check(name, c["value"], c["pass"], c["tolerance"], c["provenance"])
    if args.backend == "float":
        lap = section_laplacian_correspondence(n - 1, seed=args.seed + 1)
        worst = min(lap["orders"].values())
        rep.check("section_laplacian_correspondence", lap, worst >= 1.9, 1.9, "DERIVED")
    return rep


def _parse_matrices(doc, backend):
    from .minkowski_lie import to_rational

    mats = []
    for M in doc["matrices"]:
        arr = np.array([[Fraction(v) if isinstance(v, str) else Fraction(v) for v in row] for row in M],
                       dtype=object)
        mats.append(to_rational(arr) if backend == "rational" else arr.astype(float))
    return mats


def cmd_cohomology(args, doc) -> Report:
    from .group_cohomology import (
        Presentation, Representation, bending_cocycle, evaluate_word, h1_report, in_coboundaries,
    )

    rep = Report("cohomology", {"document": doc, "backend": args.backend, "seed": args.seed})
    n = doc["n"]
    mats = _parse_matrices(doc, args.backend)
    if len(mats) != len(doc["generators"]):
        raise DocumentError("$.matrices: one matrix per generator required")
    for i, M in enumerate(mats):
        if M.shape != (n + 1, n + 1):
            raise DocumentError(f"$.matrices[{i}]: expected shape {(n + 1, n + 1)}, got {M.shape}")
    P = Presentation(tuple(doc["generators"]), [tuple(r) for r in doc["relators"]])
    rho = Representation(P, mats, n)
    report = h1_report(P, rho)
    summary = report.summary()
    rep.data["cohomology"] = summary
    rep.check("H1_nonnegative", summary["dim_H1"], summary["dim_H1"] >= 0, 0, "TRIVIAL")
    float_ok = all(summary["float_dims"][k] == summary[f"dim_{k}"] for k in ("Z1", "B1", "H1", "H0"))
    rep.check("float_dims_agree", summary["float_dims"], float_ok, 0, "DERIVED")
    expected = doc.get("expected", {})
    for key in ("dim_Z1", "dim_B1", "dim_H1", "dim_H0"):
        if key in expected:
            e = expected[key]
            rep.check(f"expected.{key}", summary[key], summary[key] == e["value"], 0, e["provenance"])
    if "bending" in doc:
        b = doc["bending"]
        X = _parse_matrices({"matrices": [b["X"]]}, args.backend)[0]
        z = bending_cocycle(rho, b["A"], b["B"], [tuple(c) for c in b["C"]], X)
        # float residuals are relative to the roundoff scale of the word
        worst = 0.0
        for r in P.relators:
            v = float(np.abs(np.asarray(z(r), dtype=float)).max())
            worst = max(worst, v if rho.exact else v / max(1.0, z.magnitude(r)))
        tol = 0.0 if rho.exact else 1e-10
        rep.check("bending.relator_residual", worst, worst <= tol, tol, "PAPER")
        a_side = max(float(np.abs(np.asarray(z((a,)), dtype=float)).max()) for a in b["A"])
        rep.check("bending.vanishes_on_A", a_side, a_side == 0, 0, "DERIVED")
        outside = not in_coboundaries(z)
        e = expected.get("bending_outside_B1", {"value": True, "provenance": "DERIVED"})
        rep.check("bending.outside_B1", outside, outside == e["value"], 0, e["provenance"])
        for c in b["C"]:
            g = evaluate_word(rho, c)
            rep.data.setdefault("bending_C_traces", []).append(str(sum(g[i, i] for i in range(n + 1))))
    return rep


def _bend_setup(doc, seed):
    from .model_forms import _sample_ball, bend_from_quadratic_differential, extend_model
    from .warped_geometry import CrossSectionChart

    chart = CrossSectionChart(2)
    coeffs = [complex(float(re), float(im)) for re, im in doc["quadratic_differential"]]
    B = bend_from_quadratic_differential(coeffs, chart, doc.get("name", ""))
    w0 = extend_model(B)
    rng = np.random.default_rng(doc.get("seed", 0) + seed)
    x = _sample_ball(rng, doc.get("sample_points", 5), 2, doc.get("sample_radius", 0.4))
    r = rng.uniform(-0.3, 0.3, size=len(x))
    return chart, B, w0, x, np.column_stack([r, x])


def cmd_modelform(args, doc) -> Report:
    from .model_forms import bend_residuals, cauchy_riemann_residual, verify_model_harmonic

    rep = Report("modelform", {"document": doc, "backend": args.backend, "seed": args.seed})
    chart, B, w0, x, y = _bend_setup(doc, args.seed)
    hs = tuple(doc.get("h", (0.02, 0.01)))
    ver = verify_model_harmonic(w0, y, hs)
    rep.data["model"] = ver
    floor = doc.get("expected", {}).get("min_order", {"value": 1.9})["value"]
    for k, order in ver["orders"].items():
        rep.check(f"order.{k}", order, order == "exact" or order >= floor, floor, "DERIVED")
    rep.check("Tstar_zero", ver["Tstar"], ver["Tstar_exact_zero"], 0.0, "PAPER")
    rep.check("trace_zero", ver["trace"], ver["trace"] == 0.0, 0.0, "PAPER")
    res = bend_residuals(B, x, chart.h)
    rep.data["bend_residuals"] = res
    coeffs = [complex(float(a), float(b)) for a, b in doc["quadratic_differential"]]
    cr = cauchy_riemann_residual(coeffs, x, 1e-3)
    rep.check("cauchy_riemann", cr, cr < 1e-8, 1e-8, "PAPER")
    return rep


def cmd_weitzenbock(args, doc) -> Report:
    from . import bundle_calculus as bc
    from .coordinate_forms import measured_order
    from .weitzenbock import (
        PatchGrid, boundary_integrand, boundary_integrand_hodge, check_zero_blocks, compact_bump_form,
        integrand_reduction, contraction_blocks, normal_contraction, tangential_killing_field,
        weitzenbock_balance,
    )

    rep = Report("weitzenbock", {"document": doc, "backend": args.backend, "seed": args.seed,
                                 "grid": args.grid})
    chart, B, w0, x, y = _bend_setup(doc, args.seed)
    rng = np.random.default_rng(args.seed)
    gb = chart.basis
    phi = bc.EForm(rng.normal(size=(200, gb.dim, chart.n)), 1, chart.n)
    diff = float(np.abs(boundary_integrand(phi) - boundary_integrand_hodge(phi)).max())
    rep.check("integrand_vs_hodge", diff, diff < 1e-10, 1e-10, "DERIVED")
    t2 = float(np.abs(contraction_blocks(phi).stacked() - normal_contraction(phi).stacked()).max())
    rep.check("block_formula_vs_contraction", t2, t2 < 1e-12, 1e-12, "DERIVED")

    killing = tangential_killing_field(chart, rng.normal(size=len(gb.h_indices)))
    hs = tuple(doc.get("h", (0.02, 0.01)))
    zb = [check_zero_blocks(bc.canonical_lift(killing, chart, h), chart, x, h) for h in hs]
    worst = [max(z["total"].values()) for z in zb]
    rep.data["zero_blocks"] = zb
    ok = max(worst) < 1e-9 or measured_order(worst, hs[0] / hs[1]) >= 1.9
    rep.check("zero_blocks", worst, ok, 1.9, "PAPER")

    def perturbed(p):
        out = killing(p)
        out[:, 1] += 0.2 * np.sin(np.atleast_2d(p)[:, 1])
        return out

    red = integrand_reduction(w0, bc.canonical_lift(perturbed, chart, hs[-1]), chart, x, hs[-1])
    rep.check("reduction_to_2AB", red, red["residual"] <= 1e-12 * max(1.0, red["scale"]), 1e-12, "PAPER")
    rep.check("model_integrand_zero", red["model_only"], red["model_only"] == 0.0, 0.0, "PAPER")

    if "patch" in doc:
        p = doc["patch"]
        nodes = [args.grid, 2 * args.grid - 1] if args.grid else p["nodes"]
        runs = [weitzenbock_balance(w0, chart, PatchGrid(2, N, p["half_width"], p["depth"])) for N in nodes]
        res = [abs(r["residual"]) for r in runs]
        order = measured_order(res, (nodes[1] - 1) / (nodes[0] - 1))
        rep.data["collar"] = runs
        rep.check("balance.collar", {"residuals": res, "order": order}, order >= 1.9, 1.9, "DERIVED")
    if "compact_support" in doc:
        c = doc["compact_support"]
        field = compact_bump_form(chart, c["half_width"], c["depth"], c.get("bump_power", 3),
                                  c.get("amplitude", 0.3), seed=doc.get("seed", 0))
        nodes = c["nodes"]
        runs = [weitzenbock_balance(field, chart, PatchGrid(2, N, c["half_width"], c["depth"])) for N in nodes]
        res = [abs(r["residual"]) for r in runs]
        order = measured_order(res, (nodes[1] - 1) / (nodes[0] - 1))
        rep.data["compact_support"] = runs
        rep.check("balance.compact_support", {"residuals": res, "order": order}, order >= 1.9, 1.9,
                  "DERIVED")
    return rep


def cmd_bvp(args, doc) -> Report:
    from . import bvp_structure as bvp

    rep = Report("bvp", {"document": doc, "backend": args.backend, "seed": args.seed, "grid": args.grid})
    if doc["kind"] == "symbol":
        rng = np.random.default_rng(doc.get("seed", 0) + args.seed)
        dims = [args.dimension] if args.dimension else doc.get("dimensions", [2, 3, 4])
        verdicts = []
        for m in dims:
            zetas = [z for z in doc.get("zetas", []) if len(z) == m]
            zetas += [rng.normal(size=m) for _ in range(doc.get("random_count", 100))]
            for z in zetas:
                r = bvp.symbol_ellipticity_check(bvp.SymbolProblem(m, tuple(z)))
                scaled = bvp.symbol_ellipticity_check(bvp.SymbolProblem(m, tuple(3.5 * np.asarray(z))))
                verdicts.append((r.verdict, scaled.verdict))
            weak = bvp.symbol_ellipticity_check(bvp.SymbolProblem(m, tuple(rng.normal(size=m))), ("dsigma",))
            rep.check(f"weakened.m{m}", weak.surviving_dimension, weak.surviving_dimension == 1, 0,
                      "DERIVED")
        n_ok = sum(v == ("elliptic", "elliptic") for v in verdicts)
        rep.check("symbol.elliptic", {"elliptic": n_ok, "total": len(verdicts)}, n_ok == len(verdicts), 0,
                  "PAPER")
        return rep

    m = args.dimension or doc["m"]
    nodes = args.grid or doc["nodes"]
    strip = bvp.StripDiscretization(m, nodes, doc.get("depth", 1.0), doc.get("half_width", 0.5))
    op = bvp.assemble_discrete_operator(strip)
    d = op.diagnostics
    rep.data["operator"] = d
    rep.check("symmetry", d["symmetry_residual"], d["symmetry_residual"] < 1e-10, 1e-10, "DERIVED")
    rep.check("eigen_floor", d["smallest_eigenvalue"], d["smallest_eigenvalue"] >= 2 * m, 2 * m, "PAPER")
    rep.check("eigen_oracle", abs(d["smallest_eigenvalue"] - d["eigenvalue_oracle"]),
              abs(d["smallest_eigenvalue"] - d["eigenvalue_oracle"]) < 1e-8 * d["eigenvalue_oracle"], 1e-8,
              "DERIVED")
    mms = bvp.manufactured_solution_study(m, tuple(doc.get("mms_nodes", (9, 17))), strip.depth,
                                          strip.half_width)
    rep.check("mms_order", mms, mms["order"] >= 1.9, 1.9, "DERIVED")
    tr = bvp.trace_kernel_check(strip, tuple(doc.get("mms_nodes", (9, 17))))
    rep.check("trace_kernel", tr, tr["kernel_trivial"] and tr["smallest_eigenvalue"] >= 2 * m
              and tr["mms_order"] >= 1.9, 2 * m, "PAPER")
    if "green" in doc:
        g = doc["green"]
        rep.data["green"] = green_pairing_study(g)
        gd = rep.data["green"]
        rep.check("green.beta_order", gd["beta"], gd["beta_order"] >= 1.9, 1.9, "PAPER")
        rep.check("green.defect_order", gd["defect"], gd["defect_order"] >= 1.8, 1.8, "DERIVED")
        rep.check("green.sharpness", gd["beta_violating"], abs(gd["beta_violating"][-1]) > 1e-3, 1e-3, "DERIVED")
    if args.coo:
        bvp.write_coo(op, args.coo)
        rep.data["coo"] = {"rows": op.matrix.shape[0], "nonzeros": int(op.matrix.nnz)}
    return rep


def green_test_fields(m: int):
    """Two 1-forms satisfying ``h = 0`` and ``d_r sigma = 0`` at ``r = 0``, and one violating ``h = 0``."""
    def tau(p):
        r, x = p[:, 0], p[:, 1:]
        out = np.zeros_like(p)
        out[:, 0] = np.sin(r) * np.exp(x[:, 0])
        for j in range(1, m + 1):
            out[:, j] = np.cos(r) * (1 + x[:, 0] * x[:, -1]) * (1 + 0.3 * j * x[:, j - 1]) + r ** 2 * x[:, -1]
        return out

    def psi(p):
        r, x = p[:, 0], p[:, 1:]
        out = np.zeros_like(p)
        out[:, 0] = r * np.cos(x[:, -1])
        for j in range(1, m + 1):
            out[:, j] = np.cosh(r) * x[:, 0] ** 2 + np.cos(2 * r) * np.exp(x[:, j - 1]) / j
        return out

    def violating(p):
        out = tau(p)
        out[:, 0] += np.exp(p[:, 1])
        return out

    return tau, psi, violating


def green_pairing_study(g: dict) -> dict:
    from . import bvp_structure as bvp
    from .coordinate_forms import measured_order
    from .warped_geometry import CrossSectionChart

    m = g["m"]
    metric = CrossSectionChart(m).metric if g.get("metric", "warped") == "warped" else None
    tau, psi, bad = green_test_fields(m)
    beta, defect, viol = [], [], []
    for N in g["nodes"]:
        grid = bvp.WarpedStrip(m, N, g.get("depth", 0.5), g.get("half_width", 0.4), metric)
        T, P, V = grid.sample(tau), grid.sample(psi), grid.sample(bad)
        beta.append(abs(bvp.green_boundary_pairing(T, P, grid)))
        defect.append(abs(bvp.green_defect(T, P, grid)["defect"]))
        viol.append(bvp.green_boundary_pairing(V, P, grid))
    ratio = (g["nodes"][1] - 1) / (g["nodes"][0] - 1)
    return {"nodes": g["nodes"], "beta": beta, "beta_order": measured_order(beta, ratio),
            "defect": defect, "defect_order": measured_order(defect, ratio), "beta_violating": viol}


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyprigid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, document=True):
        if document:
            p.add_argument("document", help="path to a JSON document or the name of a shipped one")
        p.add_argument("--dimension", type=int, default=None)
        p.add_argument("--backend", choices=("rational", "float"), default="rational")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--grid", type=int, default=None, help="nodes per axis (overrides the document)")
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
        return p

    common(sub.add_parser("identities", help="pointwise algebra suite"), document=False)
    common(sub.add_parser("cohomology", help="twisted H^1 of a presented group"))
    common(sub.add_parser("modelform", help="harmonicity of a model form"))
    common(sub.add_parser("weitzenbock", help="boundary integrand and balance checks"))
    bvp = common(sub.add_parser("bvp", help="boundary value problem structure"))
    bvp.add_argument("--coo", default=None, help="export the strip operator as COO text")
    sub.add_parser("documents", help="list shipped documents")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "documents":
        print("\n".join(shipped_documents()))
        return 0
    try:
        if args.command == "identities":
            if args.dimension is not None and args.dimension < 2:
                raise DocumentError("--dimension must be at least 2")
            rep = cmd_identities(args)
        else:
            doc = load_document(args.document)
            validate(doc, COMMAND_KINDS[args.command])
            handler = {"cohomology": cmd_cohomology, "modelform": cmd_modelform,
                       "weitzenbock": cmd_weitzenbock, "bvp": cmd_bvp}[args.command]
            rep = handler(args, doc)
    except DocumentError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return 2
    text = rep.dumps()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for name, c in rep.checks.items():
        if not c["pass"]:
            print(f"FAILED: {name}", file=sys.stderr)
    return 0 if rep.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
