"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 solver non-convergence.  Errors are
reported as JSON on stderr and, with ``--out``, in ``<out>.error.json``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ._barrier import NonConvergence
from .space import DiscreteSpace, SpaceError, truncated_family

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2


class InputError(ValueError):
    def __init__(self, message, pointer=None):
        super().__init__(message)
        self.pointer = pointer


# ----------------------------------------------------------------- inputs

def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}", str(path)) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc.msg}", f"{path}: line {exc.lineno}") from None


def _section(obj, key):
    """Bundle files hold a space plus inputs; plain files hold one object."""
    if isinstance(obj, dict) and "space" in obj:
        if key not in obj:
            raise InputError(f"bundle has no {key!r} entry", f"/{key}")
        return obj[key]
    return obj


def _space(path):
    try:
        return DiscreteSpace.from_json(_section(_read_json(path), "space"))
    except SpaceError as exc:
        raise InputError(f"{path}: {exc}", exc.pointer) from None


def _vector(obj, space, name):
    """Node function from a list (index order) or an object keyed by node id."""
    n = space.n
    if isinstance(obj, dict) and "values" in obj:
        obj = obj["values"]
    if isinstance(obj, list):
        if len(obj) != n:
            raise InputError(f"{name} must have {n} entries", f"/{name}")
        vals = obj
    elif isinstance(obj, dict):
        keys = {str(v): k for k, v in enumerate(space.nodes)}
        vals = [0.0] * n
        for key, v in obj.items():
            if key not in keys:
                raise InputError(f"unknown node {key!r} in {name}", f"/{name}/{key}")
            vals[keys[key]] = v
    else:
        raise InputError(f"{name} must be a list or an object", f"/{name}")
    try:
        out = np.array(vals, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{name} entries must be numbers", f"/{name}") from None
    if not np.all(np.isfinite(out)):
        raise InputError(f"{name} entries must be finite", f"/{name}")
    return out


def _load_vector(path, space, name):
    return _vector(_section(_read_json(path), name), space, name)


def _family(path, space):
    from .arcs import family_from_json
    try:
        return family_from_json(_section(_read_json(path), "family"), space)
    except SpaceError as exc:
        raise InputError(f"{path}: {exc}", exc.pointer) from None


def _nodes(path, space):
    obj = _read_json(path)
    keys = {str(v): k for k, v in enumerate(space.nodes)}
    try:
        return sorted(keys[str(v)] for v in obj)
    except (KeyError, TypeError):
        raise InputError(f"{path}: unknown node identifier", "/") from None


# ---------------------------------------------------------------- outputs

def _num(x):
    x = float(x)
    if np.isfinite(x):
        return x + 0.0
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def _dump_json(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _dump_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v) + 0.0) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_result(args, obj, header=None, rows=None):
    """JSON by default; CSV when the command produced a table and ``--json`` is off."""
    if rows is not None and not args.json:
        _emit(args, _dump_csv(header, rows))
    else:
        _emit(args, _dump_json(obj))


# --------------------------------------------------------------- commands

def cmd_validate(args):
    from .space import validate
    space = _space(args.space)
    rep = validate(space, np.random.default_rng(args.seed))
    rows = [(v["kind"], " ".join(map(str, v["indices"]))) for v in rep.violations]
    _emit_result(args, rep.to_dict(), ["kind", "indices"], rows)
    return EXIT_OK if rep.valid else EXIT_INPUT


def cmd_modulus(args):
    from .modulus import modulus_p, modulus_tilde_p
    space = _space(args.space)
    fam = _family(args.family, space)
    fn = modulus_tilde_p if args.tilde else modulus_p
    sol = fn(fam, space, args.p, rng=None)
    _emit_result(args, sol.to_json(space))
    return EXIT_OK


def cmd_content(args):
    from .plans import content_p
    space = _space(args.space)
    fam = _family(args.family, space)
    res = content_p(fam, space, args.p, tilde=args.tilde)
    out = {"value": res.value, "valuePowerP": res.value ** args.p, "gap": res.gap,
           "identityResidual": res.identity_residual, "iterations": res.iterations}
    if res.plan is not None:
        out["plan"] = [{"path": [space.nodes[v] for v in a.nodes], "weight": float(w)}
                       for a, w in zip(res.plan.support, res.plan.weights) if w > 0]
    _emit_result(args, out)
    return EXIT_OK


def cmd_duality(args):
    from .plans import duality_certificate
    space = _space(args.space)
    fam = _family(args.family, space)
    rep = duality_certificate(fam, space, args.p, tilde=args.tilde)
    out = rep.to_json(space)
    out["passed"] = bool(rep.gap <= args.tol and rep.slackness <= args.tol)
    _emit_result(args, out)
    return EXIT_OK


def _metric(spec, space):
    from .conformal import conformal_distance, length_distance
    if spec is None or spec == "dist":
        return space.dist
    if spec == "length":
        return length_distance(space)
    if spec.startswith("conformal:"):
        g = _load_vector(spec.split(":", 1)[1], space, "g")
        try:
            return conformal_distance(space, g)
        except ValueError as exc:
            raise InputError(str(exc), "/g") from None
    raise InputError(f"unknown metric {spec!r}", "--metric")


def cmd_kr(args):
    from .transport import MassMismatch, kr_dual, kr_primal
    space = _space(args.space)
    mu0 = _load_vector(args.mu0, space, "mu0")
    mu1 = _load_vector(args.mu1, space, "mu1")
    D = _metric(args.metric, space)
    try:
        primal, coupling = kr_primal(mu0, mu1, D)
        dual, phi = kr_dual(mu0, mu1, D)
    except MassMismatch as exc:
        raise InputError(str(exc), "/mu1") from None
    except ValueError as exc:
        raise InputError(str(exc), "/mu0") from None
    gap = abs(primal - dual) if np.isfinite(primal) else (0.0 if primal == dual else np.inf)
    out = {"primal": primal, "dual": dual, "gap": gap}
    if coupling is not None:
        out["coupling"] = [[space.nodes[i], space.nodes[j], float(coupling[i, j])]
                           for i, j in zip(*np.nonzero(coupling))]
    if phi is not None:
        out["potential"] = phi
    _emit_result(args, out)
    return EXIT_OK


def cmd_conformal(args):
    from .conformal import chain_distance, conformal_distance, dual_lipschitz_distance
    space = _space(args.space)
    g = _load_vector(args.g, space, "g")
    try:
        if args.variant == "dual":
            D = dual_lipschitz_distance(space, g)
        elif args.variant == "trapezoid":
            D = conformal_distance(space, g)
        elif args.variant.startswith("chain"):
            eps = float(args.variant.split(":", 1)[1]) if ":" in args.variant else np.inf
            D = chain_distance(space, g, None, eps)
        else:
            raise InputError(f"unknown variant {args.variant!r}", "--variant")
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(str(exc), "/g") from None
    rows = [(space.nodes[i], space.nodes[j], _num(D[i, j])) for i in range(space.n) for j in range(space.n)]
    _emit_result(args, {"variant": args.variant, "distance": D}, ["x", "y", "distance"], rows)
    return EXIT_OK


def cmd_hopflax(args):
    from .hopflax import EmptyK, flow, parse_times
    space = _space(args.space)
    f = _load_vector(args.f, space, "f")
    try:
        times = parse_times(args.times)
    except ValueError as exc:
        raise InputError(str(exc), "--times") from None
    K = _nodes(args.K, space) if args.K else None
    delta = None
    if args.metric:
        if not args.metric.startswith("member:"):
            raise InputError(f"unknown metric {args.metric!r}", "--metric")
        th = ([float(v) for v in args.thresholds.split(",")] if args.thresholds
              else np.unique(space.dist[np.isfinite(space.dist) & (space.dist > 0)]))
        try:
            fam = truncated_family(space, th)
            delta = fam[int(args.metric.split(":", 1)[1])]
        except (ValueError, IndexError) as exc:
            raise InputError(str(exc), "--metric") from None
    try:
        states = flow(f, times, space, K, delta, args.p)
    except (EmptyK, ValueError) as exc:
        raise InputError(str(exc), "--K") from None
    rows = [(s.t, space.nodes[x], s.values[x], s.dminus[x], s.dplus[x])
            for s in states for x in range(space.n)]
    out = [{"t": s.t, "Q": s.values, "Dminus": s.dminus, "Dplus": s.dplus} for s in states]
    _emit_result(args, out, ["t", "node", "Q", "Dminus", "Dplus"], rows)
    return EXIT_OK


def cmd_dualcheeger(args):
    from . import cheeger
    space = _space(args.space)
    h = _load_vector(args.h, space, "h")
    if args.mode == "triple":
        r = cheeger.triple_agreement(h, space, args.p, seed=args.seed)
        out = {"primal": r.primal, "plans": r.plans, "conformal": r.conformal,
               "gap": r.gap, "weak": r.weak, "passed": bool(r.gap <= args.tol)}
    else:
        fn = {"primal": cheeger.dual_cheeger_primal, "plans": cheeger.dual_cheeger_plans,
              "conformal": lambda h, s, p: cheeger.dual_cheeger_conformal(
                  h, s, p, rng=np.random.default_rng(args.seed)),
              "weak": cheeger.dual_cheeger_weak}[args.mode]
        r = fn(h, space, args.p)
        out = {"mode": args.mode, "value": r.value, "gap": r.gap}
        out.update({k: v for k, v in r.extra.items() if np.isscalar(v)})
    _emit_result(args, out)
    return EXIT_OK


F_CHOICES = {
    "sin": lambda x: np.sin(np.pi * x),
    "square": lambda x: x ** 2,
    "abs": lambda x: np.abs(x - 0.5),
}


def cmd_hw(args):
    from .cheeger import hw_refinement
    try:
        Ns = [int(v) for v in args.N.split(",")]
    except ValueError:
        raise InputError("--N must be a comma-separated list of integers", "--N") from None
    if any(N < 1 for N in Ns):
        raise InputError("--N entries must be positive", "--N")
    rows = hw_refinement(F_CHOICES[args.f], Ns, args.p)
    table = [(r.N, r.pce, r.wce, r.gap, r.gap / r.pce if r.pce else 0.0) for r in rows]
    _emit_result(args, [dict(zip(["N", "pCE", "wCE", "gap", "relGap"], t)) for t in table],
                 ["N", "pCE", "wCE", "gap", "relGap"], table)
    return EXIT_OK


def cmd_poly(args):
    from .polyapprox import smooth_max, trunc_poly
    try:
        if args.kind == "truncate":
            P = trunc_poly(args.c, args.alpha, args.beta, args.eps)
        else:
            P = smooth_max(args.c, args.eps, rng=np.random.default_rng(args.seed))
    except ValueError as exc:  # includes DegreeCapExceeded
        raise InputError(str(exc), "--eps") from None
    _emit(args, _dump_json(P.to_json()))
    return EXIT_OK


# ----------------------------------------------------------------- suite

def _fixture_checks(name, obj, args):
    """Rows ``(fixture, check, passed, residual, note)``; failures become rows."""
    try:
        return _checks(name, obj, args)
    except (ValueError, NonConvergence) as exc:
        return [(name, "error", False, np.inf, f"{type(exc).__name__}: {exc}")]


def _checks(name, obj, args):
    from .conformal import sandwich_residual
    from .space import validate
    tol = args.tol
    rows = []
    spec = obj.get("space", obj) if isinstance(obj, dict) else obj
    try:
        space = DiscreteSpace.from_json(spec)
    except SpaceError as exc:
        return [(name, "parse", False, np.inf, exc.pointer or "")]
    rep = validate(space, np.random.default_rng(args.seed))
    rows.append((name, "validate", rep.valid, float(len(rep.violations)), ""))
    p = float(obj.get("p", args.p)) if isinstance(obj, dict) else args.p
    if not isinstance(obj, dict) or "space" not in obj:
        return rows
    if "family" in obj:
        from .arcs import family_from_json
        from .plans import duality_certificate
        fam = family_from_json(obj["family"], space)
        cert = duality_certificate(fam, space, p)
        rows.append((name, "duality", bool(cert.gap <= tol and cert.slackness <= tol),
                     float(max(cert.gap, cert.slackness)), ""))
    if "h" in obj:
        from .cheeger import _rel, dual_cheeger_conformal, dual_cheeger_plans
        from .transport import kr_dual, kr_primal
        h = _vector(obj["h"], space, "h")
        mu = space.measure * h
        a, b = np.maximum(mu, 0), np.maximum(-mu, 0)
        kp, kd = kr_primal(a, b, space.dist)[0], kr_dual(a, b, space.dist)[0]
        r = abs(kp - kd) if np.isfinite(kp) else float(kp != kd)
        rows.append((name, "kr_duality", r <= 1e-8, r, ""))
        v1 = dual_cheeger_plans(h, space, p).value
        v2 = dual_cheeger_conformal(h, space, p, rng=np.random.default_rng(args.seed)).value
        r = _rel(v1, v2)
        rows.append((name, "plans_conformal", r <= 1e-4, r, ""))
    if "g" in obj:
        g = _vector(obj["g"], space, "g")
        r = sandwich_residual(space, g)
        rows.append((name, "conformal_order", r == 0.0, r, ""))
    if "f" in obj:
        from .hopflax import estimate_suite
        f = _vector(obj["f"], space, "f")
        rep = estimate_suite(f, space, np.geomspace(0.01, 10, 32), p=p)
        for c in rep.checks:
            rows.append((name, f"hopflax_{c.name}", c.passed, c.residual, ""))
    return rows


def cmd_suite(args):
    d = Path(args.directory)
    if not d.is_dir():
        raise InputError(f"{d} is not a directory", str(d))
    files = sorted(d.glob("*.json"))
    objs = {}
    bad = []
    for fpath in files:
        try:
            objs[fpath.stem] = _read_json(fpath)
        except InputError as exc:
            bad.append((fpath.stem, "parse", False, np.inf, exc.pointer or ""))
    with ThreadPoolExecutor(max_workers=4) as ex:
        futs = {k: ex.submit(_fixture_checks, k, v, args) for k, v in objs.items()}
        results = {k: f.result() for k, f in futs.items()}
    rows = bad + [r for k in sorted(results) for r in results[k]]
    rows.sort(key=lambda r: r[0])
    table = [(fx, ch, "pass" if ok else "fail", _num(res), note) for fx, ch, ok, res, note in rows]
    _emit_result(args, [dict(zip(["fixture", "check", "status", "residual", "note"], t)) for t in table],
                 ["fixture", "check", "status", "residual", "note"], table)
    return EXIT_OK if all(r[2] for r in rows) else EXIT_INPUT


# ----------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, default=2.0, help="global exponent p > 1")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-5, help="pass threshold for certificates")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--json", action="store_true", help="JSON instead of CSV for tables")

    ap = argparse.ArgumentParser(prog="mmsobolev", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("validate", cmd_validate, "check metric axioms of a space")
    sp.add_argument("--space", required=True)
    for name, fn, h in (("modulus", cmd_modulus, "p-modulus of an arc family"),
                        ("content", cmd_content, "p-content of an arc family"),
                        ("duality", cmd_duality, "modulus/content duality certificate")):
        sp = add(name, fn, h)
        sp.add_argument("--space", required=True)
        sp.add_argument("--family", required=True)
        sp.add_argument("--tilde", action="store_true")
    sp = add("kr", cmd_kr, "Kantorovich-Rubinstein distance, primal and dual")
    sp.add_argument("--space", required=True)
    sp.add_argument("--mu0", required=True)
    sp.add_argument("--mu1", required=True)
    sp.add_argument("--metric", help="dist | length | conformal:g.json")
    sp = add("conformal", cmd_conformal, "conformal distances")
    sp.add_argument("--space", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--variant", default="trapezoid", help="dual | trapezoid | chain[:eps]")
    sp = add("hopflax", cmd_hopflax, "Hopf-Lax flow trace")
    sp.add_argument("--space", required=True)
    sp.add_argument("--f", required=True)
    sp.add_argument("--times", default="0.01:10:log32")
    sp.add_argument("--K")
    sp.add_argument("--metric", help="member:i of the truncated family")
    sp.add_argument("--thresholds", help="comma-separated thresholds of the truncated family")
    sp = add("dualcheeger", cmd_dualcheeger, "dual Cheeger energy")
    sp.add_argument("--space", required=True)
    sp.add_argument("--h", required=True)
    sp.add_argument("--mode", default="triple", choices=["primal", "plans", "conformal", "weak", "triple"])
    sp = add("hw", cmd_hw, "H = W refinement table on the interval")
    sp.add_argument("--N", default="16,64,256")
    sp.add_argument("--f", default="sin", choices=sorted(F_CHOICES))
    sp = add("poly", cmd_poly, "certified polynomial approximants")
    sp.add_argument("kind", choices=["truncate", "smoothmax"])
    sp.add_argument("--c", type=float, default=2.0)
    sp.add_argument("--alpha", type=float, default=-1.0)
    sp.add_argument("--beta", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=0.05)
    sp = add("suite", cmd_suite, "run checks on every fixture in a directory")
    sp.add_argument("directory")
    return ap


def _report_error(args, kind, exc, pointer=None, best=None):
    err = {"error": kind, "message": str(exc)}
    if pointer is not None:
        err["pointer"] = pointer
    if best is not None:
        err["best"] = best
    text = _dump_json(err)
    sys.stderr.write(text)
    if getattr(args, "out", None):
        Path(str(args.out) + ".error.json").write_text(text)


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if not args.p > 1 or not np.isfinite(args.p):
        _report_error(args, "InputError", "p must lie in (1, inf)", "--p")
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        _report_error(args, "InputError", exc, exc.pointer)
        return EXIT_INPUT
    except NonConvergence as exc:
        best = getattr(exc, "best", None)
        if best is not None and not isinstance(best, (dict, list, float, int)):
            best = getattr(best, "__dict__", str(best))
        _report_error(args, "NonConvergence", exc, best=best)
        return EXIT_SOLVER
    except ValueError as exc:
        _report_error(args, type(exc).__name__, exc, getattr(exc, "pointer", None))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
