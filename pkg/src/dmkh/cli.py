"""Command-line front end: `dmkh <command> <file.dm> [options]`.

Exit codes: 0 success, 1 input error, 2 computed but failed verification.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from fractions import Fraction
from typing import Any

from .algebra import AlgebraError, GaussQ, MatSeries, Poly, RatFunc
from .bridge import (
    BridgeError,
    FormalLambdaConnection,
    KmsPoint,
    connection_from_rank1,
    kms_map,
    psi_forward_general,
    psi_forward_rank1,
    psi_inverse,
)
from .degree import (
    StabilityError,
    build_example_A,
    build_example_B,
    filtered_bundle_degree_P1,
    finite_contribution,
    make_pdm,
    parabolic_degree,
    slope,
    slope_contribution,
    stability_check,
)
from .difference import (
    DifferenceModule,
    ModuleError,
    chain_parabolic,
    default_order,
    singularity_data,
    standard_parabolic,
    validate_finite_data,
)
from .formal import FormalError, formal_at_infinity, level_check, newton_polygon
from .manifest import (
    Expr,
    Manifest,
    ManifestError,
    Section,
    get_ident,
    get_int,
    get_list,
    get_matrix,
    get_poly,
    get_rational,
    get_scalar,
    parse_manifest,
    parse_value,
    print_manifest,
)

COMMANDS = ("classify", "degree", "stability", "psi", "verify-monopole", "kms")
TOL = 1e-10

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Serialization


def jsonable(x: Any) -> Any:
    if isinstance(x, (Fraction, GaussQ, RatFunc, Poly)):
        return str(x)
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return round_sig(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def round_sig(x: float, sig: int = 3) -> float:
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.{sig - 1}e}")


def digest(man: Manifest | None, options: dict) -> str:
    text = (print_manifest(man) if man is not None else "") + json.dumps(options, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def _matrix_strings(m) -> list:
    return [[str(a) for a in row] for row in m]


# ---------------------------------------------------------------------------
# Entity builders


def _series_at_infinity(f: RatFunc, order: int):
    if f.is_zero():
        from .algebra import Puiseux

        return Puiseux.zero(order)
    v = f.v_inf()
    return f.series_at_infinity(max(order - v, 1)).truncate(order)


def build_pdm(man: Manifest, order: int):
    """(pdm, closed form or None, diagnostics)."""
    if man.entity != "difference_module":
        raise InputError("command needs a difference_module manifest")
    mod = man.section("module")
    T = get_rational(mod, "T", Fraction(1))
    if T <= 0:
        raise InputError("T must be positive")
    cons = get_ident(mod, "construction")
    if cons == "example_a":
        S = get_list(mod, "S")
        ell = [int(v.re) for v in get_list(mod, "ell")]
        res = build_example_A(S, ell, [v.re for v in get_list(mod, "weights")], [v.re for v in get_list(mod, "d")],
                              T=T, order=order)
        return res.pdm, res.closed_form, list(res.warnings)
    if cons == "example_b":
        roots = get_list(mod, "roots")
        Q = get_poly(mod, "Q")
        res = build_example_B(roots, Q, [v.re for v in get_list(mod, "weights")], [v.re for v in get_list(mod, "d")],
                              lc_p=get_scalar(mod, "lc_p", GaussQ(1)), T=T, order=order)
        return res.pdm, res.closed_form, list(res.warnings)
    lam = get_scalar(mod, "lambda", GaussQ(0))
    phi = get_matrix(mod, "phi")
    module = DifferenceModule(phi, lam, T)
    finite = []
    for sec in man.all("place"):
        at = get_scalar(sec, "at")
        weights = [v.re for v in get_list(sec, "weights")]
        middle = sec.get("middle")
        if middle is None:
            if len(weights) != 1:
                raise InputError("a place without middle lattices takes one weight")
            finite.append(standard_parabolic(module, at, weights[0]))
        else:
            mats = [get_matrix(Section("place", (("m", m),)), "m") for m in middle]
            finite.append(chain_parabolic(module, at, weights, mats))
    diags = validate_finite_data(module, finite)
    have = {fp.place for fp in finite}
    roots, _ = module.singular_support()
    for x in roots:
        if x not in have:
            finite.append(standard_parabolic(module, x, 0))
            diags.append(f"weight 0 assumed at {x}")
    inf = man.section("infinity")
    basis = d = None
    if inf is not None:
        b = get_matrix(inf, "basis")
        if b is not None:
            basis = MatSeries.from_entries([[_series_at_infinity(RatFunc.of(a), order) for a in row] for row in b])
        dl = get_list(inf, "d")
        if dl is not None:
            d = [v.re for v in dl]
    return make_pdm(module, finite, basis, d, order=order), None, diags


def build_connection(man: Manifest, order: int) -> tuple[FormalLambdaConnection, Any]:
    if man.entity != "lambda_connection":
        raise InputError("command needs a lambda_connection manifest")
    con = man.section("connection")
    q = get_int(con, "q", 1)
    lam = get_scalar(con, "lambda", GaussQ(0))
    T = get_rational(con, "T", Fraction(1))
    if "a" in con:
        a = get_poly(con, "a")
        return connection_from_rank1(a, q, lam, T, order), a
    mats = []
    for m in con.get("A"):
        mat = get_matrix(Section("connection", (("A", m),)), "A")
        row = []
        for r in mat:
            vals = []
            for f in r:
                if not (f.is_poly() and f.num.deg <= 0):
                    raise InputError("connection coefficients must be constants")
                vals.append(f.num.coeff(0))
            row.append(vals)
        mats.append(row)
    return FormalLambdaConnection(q, lam, T, tuple(mats), order), None


# ---------------------------------------------------------------------------
# Commands


def cmd_classify(man: Manifest, opts: dict) -> tuple[dict, list, bool]:
    order = opts["order"]
    diags: list = []
    if man.entity == "lambda_connection":
        conn, _ = build_connection(man, order)
        from .formal import FormalModule

        fm = FormalModule(psi_forward_general(conn, order), conn.nu)
        target = fm
    else:
        pdm, _, diags = build_pdm(man, order)
        target = pdm.module
        fm = formal_at_infinity(pdm.module, order)
    dec = newton_polygon(target, order)
    try:
        level = level_check(fm, order)
    except (FormalError, AlgebraError) as exc:
        level = "undetermined"
        diags.append(f"level: {exc}")
    comps = [
        {"omega": c.omega, "alpha": c.alpha if c.alpha is not None else c.factor, "multiplicity": c.multiplicity}
        for c in dec.components
    ]
    result = {
        "slopes": {str(k): v for k, v in dec.slopes().items()},
        "ramification": dec.ramification,
        "components": comps,
        "polygon": [[j, v] for j, v in dec.polygon],
        "level": level,
        "path": dec.path,
    }
    diags += list(dec.notes)
    return result, diags, True


def cmd_degree(man: Manifest, opts: dict):
    pdm, closed, diags = build_pdm(man, opts["order"])
    deg = parabolic_degree(pdm)
    result = {
        "degree": deg,
        "filtered_bundle_degree": filtered_bundle_degree_P1(pdm),
        "finite_contribution": finite_contribution(pdm),
        "slope_contribution": slope_contribution(pdm),
        "mu": slope(pdm),
        "jumps": [{"place": r.place, "weight": r.weight, "jump": r.jump}
                  for r in singularity_data(pdm.module, pdm.finite)],
    }
    ok = True
    if closed is not None:
        result["closed_form"] = closed
        ok = closed == deg
        if not ok:
            diags.append("degree differs from the closed form")
    return result, diags, ok


def cmd_stability(man: Manifest, opts: dict):
    pdm, _, diags = build_pdm(man, opts["order"])
    v = stability_check(pdm, opts.get("degree_bound"))
    result = {
        "status": v.status,
        "witness": v.witness.name if v.witness else None,
        "witness_mu": v.witness.mu if v.witness else None,
        "mu": v.mu_total,
        "degree_bound": v.bound,
        "certified": v.certified,
        "candidates": [{"line": w.name, "mu": w.mu} for w in v.candidates],
    }
    return result, diags + list(v.notes), True


def cmd_psi(man: Manifest, opts: dict):
    order = opts["order"]
    conn, a = build_connection(man, order)
    G = psi_forward_general(conn, order)
    diags: list = []
    coeffs = [_matrix_strings(G.coeff_n(j)) for j in range(order)]
    result: dict = {"q": conn.q, "nu": conn.nu, "coefficients": coeffs}
    ok = True
    if a is not None and conn.lam:
        closed = psi_forward_rank1(a, conn.q, conn.lam, conn.T, order)
        same = all(G.coeff_n(j)[0][0] == closed.coeff(Fraction(j, conn.q)) for j in range(order))
        result["rank1_closed_form_agrees"] = same
        ok &= same
    try:
        back = psi_inverse(G, conn.q, conn.lam, conn.T, order)
        rt = all(back.coeff(j) == conn.coeff(j) for j in range(order))
        result["round_trip"] = rt
        ok &= rt
    except BridgeError as exc:
        result["round_trip"] = None
        diags.append(f"inverse: {exc}")
    return result, diags, ok


def cmd_kms(man: Manifest, opts: dict):
    if man.entity != "lambda_connection":
        raise InputError("kms needs a lambda_connection manifest")
    con, k = man.section("connection"), man.section("kms")
    if k is None:
        raise InputError("missing [kms] section")
    lam = get_scalar(con, "lambda", GaussQ(0))
    pt = KmsPoint(get_rational(k, "a"), get_scalar(k, "alpha"))
    out = kms_map(lam, pt)
    return {"lambda": lam, "a": out.a, "alpha": out.alpha}, [], True


def _model_from_params(params: dict):
    from . import monopoles as mp

    fam = params["family"]
    lam = params.get("lambda", GaussQ(0))
    T = params.get("T", Fraction(1))
    if fam == "lp_ell":
        return mp.basic_lp_ell(params.get("p", 1), params.get("ell", 1), lam, T)
    if fam == "frobenius":
        a = params.get("frak_a")
        if a is None:
            raise InputError("frobenius needs frak_a")
        return mp.frobenius(list(a.c), params.get("p", 1), lam, T)
    if fam == "tame":
        return mp.tame(params.get("a", Fraction(0)), params.get("alpha", GaussQ(0)), lam, T)
    if fam == "gamma":
        return mp.global_gamma(params.get("gamma", GaussQ(0)), lam, T)
    if fam == "dirac":
        return mp.DiracL(params.get("t10", Fraction(0)), params.get("beta10", GaussQ(0)), params.get("ell", 0),
                         params.get("weight", Fraction(0)), T)
    raise InputError(f"unknown family {fam}")


def model_params_from_manifest(man: Manifest) -> dict:
    if man.entity != "monopole_model":
        raise InputError("verify-monopole needs a monopole_model manifest")
    sec = man.section("model")
    out: dict = {"family": get_ident(sec, "family")}
    for key in ("p", "ell"):
        if key in sec:
            out[key] = get_int(sec, key)
    for key in ("T", "a", "t10", "weight"):
        if key in sec:
            out[key] = get_rational(sec, key)
    for key in ("lambda", "alpha", "gamma", "beta10"):
        if key in sec:
            out[key] = get_scalar(sec, key)
    if "frak_a" in sec:
        out["frak_a"] = get_poly(sec, "frak_a")
    return out


def cmd_verify_monopole(params: dict, opts: dict):
    from . import monopoles as mp

    model = _model_from_params(params)
    diags: list = []
    if isinstance(model, mp.DiracL):
        deg = mp.global_degree(model)
        expected = -(model.a + Fraction(model.ell, 2))
        return {"family": "dirac", "global_degree": deg, "expected": expected}, diags, deg == expected
    n = opts.get("samples") or 64
    rep = mp.sweep(model, n)
    checks = {"bogomolny": rep.bogomolny < TOL, "g_identity": rep.g_identity < TOL}
    if rep.frame is not None:
        for k, v in rep.frame.items():
            if v is not None:
                checks[f"frame_{k}"] = v < TOL
    fd = rep.fd
    if fd is not None:
        checks["fd_order2"] = fd.exact or (3.5 <= fd.ratio <= 4.5)
        if fd.exact:
            diags.append("fields are at most quadratic along every axis; differences are exact")
    result = {
        "family": model.family,
        "lambda": [round_sig(model.lam.real), round_sig(model.lam.imag)],
        "samples": n,
        "bogomolny_max": rep.bogomolny,
        "frame_max": rep.frame,
        "g_identity_max": rep.g_identity,
        "fd_errors": list(fd.errors) if fd else None,
        "fd_ratio": fd.ratio if fd else None,
        "checks": checks,
    }
    if opts.get("csv"):
        _write_csv(model, n, opts["csv"])
    if model.family == "gamma":
        result["global_degree_weight0"] = mp.global_degree(model, 0)
    return result, diags + rep.notes, all(checks.values())


def _write_csv(model, n: int, path: str) -> None:
    from . import monopoles as mp

    pts = mp.sample_points(model, n)
    bog = mp.bogomolny_residual(model, pts)
    g = mp.g_operator_check(model, pts).deviation
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re_wp", "im_wp", "bogomolny", "g_identity"])
        for row in zip(*pts, bog, g):
            w.writerow([f"{v:.6g}" for v in row])


PROVENANCE = {
    "classify": ["newton polygon of phi at infinity", "level test on the leading matrix"],
    "degree": ["parabolic degree: filtered bundle + weighted finite jumps + slope term"],
    "stability": ["difference Riccati search for invariant lines", "ramified single-slope irreducibility"],
    "psi": ["flat frame along w = y - 2 i lambda t", "rank-one exponential closed form"],
    "kms": ["kms map (a, alpha) -> (a + 2 Re(lambda conj alpha), alpha - a lambda - conj(alpha) lambda^2)"],
    "verify-monopole": ["Bogomolny equation F = star nabla phi", "mini-holomorphic frames and gluing",
                        "G(h) as a commutator of mini-holomorphic operators"],
}


# ---------------------------------------------------------------------------
# Entry point


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmkh", description="Difference modules and periodic monopoles.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("file", nargs="?", help="manifest (.dm)")
    p.add_argument("--order", type=int)
    p.add_argument("--degree-bound", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--json", dest="json_out")
    p.add_argument("--csv", dest="csv_out", help="verify-monopole: write the sample table")
    fam = p.add_argument_group("verify-monopole family flags")
    fam.add_argument("--family", choices=["lp-ell", "frobenius", "tame", "gamma", "dirac"])
    for name in ("p", "ell"):
        fam.add_argument(f"--{name}", type=int)
    for name in ("lambda", "T", "gamma", "a", "alpha", "frak-a", "t10", "weight"):
        fam.add_argument(f"--{name}")
    return p


def _flag_params(ns) -> dict:
    out: dict = {"family": ns.family.replace("-", "_")}
    for key in ("p", "ell"):
        if getattr(ns, key) is not None:
            out[key] = getattr(ns, key)
    conv = {"lambda": "scalar", "T": "rat", "gamma": "scalar", "a": "rat", "alpha": "scalar",
            "frak_a": "poly", "t10": "rat", "weight": "rat"}
    for key, kind in conv.items():
        raw = getattr(ns, key)
        if raw is None:
            continue
        v = parse_value(raw)
        if not isinstance(v, Expr):
            raise InputError(f"--{key} must be an expression")
        if kind == "poly":
            if not v.value.is_poly():
                raise InputError("--frak-a must be a polynomial in w")
            out[key] = v.value.num
        else:
            s = v.scalar()
            if kind == "rat":
                if s.im:
                    raise InputError(f"--{key} must be rational")
                s = s.re
            out[key] = s
    return out


def run(command: str, man: Manifest | None, options: dict, params: dict | None = None) -> tuple[dict, int]:
    """Execute a command; returns (report, exit code)."""
    opts = dict(options)
    opts.setdefault("order", default_order())
    key_opts = {k: v for k, v in opts.items() if k in ("order", "degree_bound", "samples") and v is not None}
    if params is not None:
        key_opts["params"] = {k: str(v) for k, v in sorted(params.items())}
    report = {"command": command, "input_digest": digest(man, key_opts), "result": None,
              "provenance": PROVENANCE[command], "diagnostics": []}
    try:
        if command == "verify-monopole":
            if params is None:
                params = model_params_from_manifest(man)
            result, diags, ok = cmd_verify_monopole(params, opts)
        else:
            if man is None:
                raise InputError("a manifest file is required")
            fn = {"classify": cmd_classify, "degree": cmd_degree, "stability": cmd_stability,
                  "psi": cmd_psi, "kms": cmd_kms}[command]
            result, diags, ok = fn(man, opts)
    except (InputError, ManifestError, ModuleError, BridgeError, StabilityError, AlgebraError, FormalError,
            ValueError, TypeError) as exc:
        report["diagnostics"] = [f"input error: {exc}"]
        return report, EXIT_INPUT
    report["result"] = jsonable(result)
    report["diagnostics"] = [str(d) for d in diags]
    return report, EXIT_OK if ok else EXIT_VERIFY


def render(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def main(argv: list[str] | None = None) -> int:
    ns = _parser().parse_args(argv)
    order = ns.order
    if order is None and os.environ.get("DMKH_ORDER"):
        order = int(os.environ["DMKH_ORDER"])
    opts = {"order": order, "degree_bound": ns.degree_bound, "samples": ns.samples, "csv": ns.csv_out}
    if opts["order"] is None:
        opts["order"] = default_order()
    man = None
    params = None
    try:
        if ns.file:
            with open(ns.file, encoding="utf-8") as fh:
                man = parse_manifest(fh.read())
        if ns.command == "verify-monopole" and ns.family:
            params = _flag_params(ns)
        elif ns.file is None:
            raise InputError("a manifest file is required")
    except (OSError, ManifestError, InputError, AlgebraError) as exc:
        report = {"command": ns.command, "input_digest": None, "result": None, "provenance": PROVENANCE[ns.command],
                  "diagnostics": [f"input error: {exc}"]}
        sys.stdout.write(render(report))
        return EXIT_INPUT
    if man is not None and man.section("options") is not None:
        o = man.section("options")
        for key in ("order", "degree_bound", "samples"):
            if key in o and (ns.order if key == "order" else getattr(ns, key, None)) is None:
                opts[key] = get_int(o, key)
    report, code = run(ns.command, man, opts, params)
    text = render(report)
    sys.stdout.write(text)
    if ns.json_out:
        with open(ns.json_out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
