"""Command-line front end.

Subcommands: ko, bvp, construct, verify, theorems, model. Exit codes:
0 Holds/success, 1 Fails, 2 Inconclusive, 3 computational failure,
4 config error. The global flags --tol, --grid and --seed default to the
environment variables ARTIFACT_TOL, ARTIFACT_GRID and ARTIFACT_SEED.
CSV output has a header row and 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from .config import (Config, Section, build_grid, build_model, build_triple, build_weight, grid_spacing,
                     load_config_file)
from .core import ArtifactError, ConfigError, Verdict

EXIT_OK, EXIT_FAILS, EXIT_INCONCLUSIVE, EXIT_COMPUTE, EXIT_CONFIG = 0, 1, 2, 3, 4
ENV_PREFIX = "ARTIFACT_"

_VERDICT_EXIT = {Verdict.HOLDS: EXIT_OK, Verdict.FAILS: EXIT_FAILS, Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE}


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return format(float(x), ".17g")


def write_csv(path, columns, rows):
    """Write rows with a header; numbers use 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _say(msg):
    print(msg, flush=True)


# ---------------------------------------------------------------------------
# global flags
# ---------------------------------------------------------------------------

def _env(name, cast):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None or raw == "":
        return None
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"environment variable {ENV_PREFIX}{name}={raw!r} is not a valid {cast.__name__}") from None


def _globals(args):
    tol = args.tol if getattr(args, "tol", None) is not None else _env("TOL", float)
    N = args.grid if getattr(args, "grid", None) is not None else _env("GRID", int)
    seed = args.seed if getattr(args, "seed", None) is not None else _env("SEED", int)
    return tol, N, 0 if seed is None else seed


def _config(args) -> Config:
    if not getattr(args, "config", None):
        raise ConfigError("--config FILE is required for this subcommand")
    return load_config_file(args.config)


# ---------------------------------------------------------------------------
# ko
# ---------------------------------------------------------------------------

def cmd_ko(args):
    from .ko import Endpoint, ko_verdict, mean_curvature_triple, plaplace_triple
    from .nonlinearity import KernelKind

    endpoint, kind, route = args.endpoint, args.kind, args.route
    if args.config:
        cfg = _config(args)
        triple = build_triple(cfg)
        s = cfg.section("ko")
        if s is not None:
            s.check({"endpoint", "kind", "route"})
            endpoint = s.get("endpoint", str, default=endpoint, choices={"zero", "infinity"})
            kind = s.get("kind", str, default=kind, choices={"standard", "mean_curvature"})
            route = s.get("route", str, default=route, choices={"auto", "closed", "numeric"})
    else:
        missing = [n for n in ("chi", "omega") if getattr(args, n) is None]
        if missing:
            raise ConfigError(f"missing flags: {', '.join('--' + m for m in missing)}")
        if args.family == "plaplace":
            triple = plaplace_triple(args.p, args.chi, args.omega, args.threshold)
        else:
            triple = mean_curvature_triple(args.chi, args.omega)
    v = ko_verdict(triple, Endpoint(endpoint), KernelKind(kind), route=route)
    _say(f"ko: {v.outcome.value} ({v.line()})")
    return _VERDICT_EXIT[v.outcome]


# ---------------------------------------------------------------------------
# bvp
# ---------------------------------------------------------------------------

def cmd_bvp(args):
    from .bvp import BvpProblem, extend_maximal, solve_dirichlet, solve_mixed

    cfg = _config(args)
    tol, N, _ = _globals(args)
    triple = build_triple(cfg)
    s = cfg.section("bvp", required=True).check({"T", "eta", "kind", "N", "xi", "extend", "r_max"})
    kind = s.get("kind", str, default="dirichlet", choices={"dirichlet", "mixed"})
    N = N if N is not None else s.get("N", int, default=512)
    weight = triple.beta if triple.beta is not None else (lambda t: np.ones_like(np.asarray(t, dtype=float)))
    ms = cfg.section("model")
    volume = build_model(ms).v if ms is not None else (lambda t: np.ones_like(np.asarray(t, dtype=float)))
    try:
        pb = BvpProblem(triple, s.get("T", required=True), s.get("eta", required=True), kind, weight, volume,
                        s.get("xi"), N)
    except ValueError as e:
        raise ConfigError(f"bvp: {e}", *s.where()) from None
    kw = {} if tol is None else {"tol": tol}
    sol = solve_dirichlet(pb, **kw) if kind == "dirichlet" else solve_mixed(pb, **kw)
    rad = sol.radial
    msg = f"bvp: solved ({kind}, N={N}, w'(0)={float(rad.wp[0]):.17g}, delta={sol.delta:.6g})"
    rows = zip(rad.r, rad.w, rad.wp)
    if s.get("extend", bool, default=False):
        ext = extend_maximal(sol, pb, r_max=s.get("r_max", default=50.0))
        msg += f"; maximal extension R_max={ext.R_max:.17g}" + (" (blow-up)" if ext.finite else " (no blow-up)")
        rad = ext.radial
        rows = zip(rad.r, rad.w, rad.wp)
    _say(msg)
    if args.out:
        write_csv(args.out, ("t", "w", "wprime"), rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# construct
# ---------------------------------------------------------------------------

_KINDS = {"cspA": "CspA", "cspB": "CspB", "sl": "SlBlowup", "sl-mc": "SlBlowupMC",
          "khasminskii": "Khasminskii", "exterior": "ExteriorDirichlet"}
_SPEC_FLOATS = ("eps", "delta", "lam", "R", "r0", "r1")
_OPTION_KEYS = {"sigma0": float, "eta0": float, "chi1": float, "chi2": float, "chi": float, "B2": float,
                "K": float, "eta": float, "xi": float, "r_max": float, "N": int, "check_structure": bool,
                "route": str}


def cmd_construct(args):
    from . import construct as cs

    cfg = _config(args)
    _, N, _ = _globals(args)
    triple = build_triple(cfg)
    s = cfg.section("construct")
    if s is None:
        s = Section({}, ("construct",), cfg.marks)
    s.check({"kind"} | set(_SPEC_FLOATS) | set(_OPTION_KEYS))
    kind = args.kind or s.get("kind", str, required=True, choices=set(_KINDS))
    ms = cfg.section("model")
    model = build_model(ms) if ms is not None else None
    bb = cfg.section("beta_bar")
    kw = {k: s.get(k) for k in _SPEC_FLOATS if s.has(k)}
    options = {k: s.get(k, t) for k, t in _OPTION_KEYS.items() if s.has(k)}
    if N is not None:
        options["N"] = N
    spec = cs.SupersolutionSpec(_KINDS[kind], triple, model=model, beta=triple.beta,
                                beta_bar=build_weight(bb) if bb is not None else None, options=options, **kw)
    if spec.kind in (cs.Kind.CSP_A, cs.Kind.CSP_B):
        prof = cs.build_csp_supersolution(spec)
    elif spec.kind in (cs.Kind.SL, cs.Kind.SL_MC):
        prof = cs.build_sl_supersolution(spec)
    elif spec.kind is cs.Kind.KHASMINSKII:
        prof = cs.build_khasminskii(spec)
    else:
        prof = cs.solve_exterior_dirichlet(spec)
    _say(prof.table())
    params = ", ".join(f"{k}={v}" if not isinstance(v, float) else f"{k}={v:.12g}" for k, v in prof.params.items())
    _say(f"construct {kind}: {'all certificates pass' if prof.passed else 'certificate failure'} ({params})")
    if args.out:
        rad = prof.radial
        write_csv(args.out, ("r", "w", "wprime"), zip(rad.r, rad.w, rad.wp))
    return EXIT_OK if prof.passed else EXIT_FAILS


# ---------------------------------------------------------------------------
# verify and theorems
# ---------------------------------------------------------------------------

_PROFILES = {"power": {"s", "shift"}, "power_over_log": {"s"}, "bracket_power": {"s"}, "constant": {"c"}}


def _profile(s: Section):
    from . import verify as vf

    fam = s.get("family", str, required=True, choices=set(_PROFILES))
    s.check({"family"} | _PROFILES[fam])
    if fam == "power":
        return vf.power_profile(s.get("s", required=True), s.get("shift", default=0.0))
    if fam == "power_over_log":
        return vf.power_over_log_profile(s.get("s", required=True))
    if fam == "bracket_power":
        return vf.bracket_power_profile(s.get("s", required=True))
    return vf.constant_profile(s.get("c", required=True))


def _grid_nodes(cfg, N, default=(1.0, 10.0, 201)):
    a, b, n = build_grid(cfg, *default)
    n = N if N is not None else n
    if grid_spacing(cfg) == "geometric":
        if a <= 0:
            raise ConfigError("geometric grid needs r_min > 0", *cfg.section("grid").where())
        return np.geomspace(a, b, n)
    return np.linspace(a, b, n)


def _verify_residual(args, cfg):
    from .verify import SIGN_TOL, residual_report

    tol, N, _ = _globals(args)
    triple = build_triple(cfg)
    model = build_model(cfg.section("model", required=True))
    prof = _profile(cfg.section("residual", required=True).check({"profile"}).sub("profile"))
    rep = residual_report(model, triple, triple.beta, prof, _grid_nodes(cfg, N), tol=tol or SIGN_TOL)
    _say(f"residual: {rep.verdict} (min={rep.min:.6g} at r={rep.argmin:.6g}, max={rep.max:.6g}, band={rep.band:.3g})")
    if args.out:
        write_csv(args.out, rep.columns, rep.rows())
    return EXIT_OK if rep.verdict == ">=0" else EXIT_FAILS


def _verify_counterexample(args, cfg):
    from .verify import GalleryVerdict, counterexample_check, get_family

    _, _, seed = _globals(args)
    s = cfg.section("counterexample", required=True).check({"family", "params", "C", "sweep", "margin"})
    fam = get_family(s.get("family", str, required=True,
                           choices={"CspIntro", "CspSharp", "WmpPower", "WmpLog", "SlSharp"}))
    C = s.get("C")
    if s.has("sweep"):
        n = s.get("sweep", int)
        margin = s.get("margin", default=0.2)
        rng = np.random.default_rng(seed)
        ok_all, last = True, None
        for inside in (True, False):
            for i in range(n):
                P = fam.sample(rng, inside, margin)
                res = counterexample_check(fam, P, C)
                good = res.verdict is GalleryVerdict.CONSISTENT if inside else res.negative_found
                ok_all &= good
                last = res
                _say(f"{fam.id.value} {'in ' if inside else 'out'} #{i:02d}: "
                     f"{'ok' if good else 'FAILED'} verdict={res.verdict.value} "
                     f"negative={'yes' if res.negative_found else 'no'} R={res.R_stable:.6g}")
        _say(f"counterexample sweep {fam.id.value}: {'pass' if ok_all else 'fail'} ({n} in, {n} out, seed {seed})")
        if args.out and last is not None and last.report is not None:
            write_csv(args.out, last.report.columns, last.report.rows())
        return EXIT_OK if ok_all else EXIT_FAILS
    ps = s.sub("params").check(set(fam.keys) | {"R", "C"})
    P = {k: ps.get(k) for k in ps.keys()}
    res = counterexample_check(fam, P, C)
    _say(f"counterexample {fam.id.value}: {res.verdict.value} (in_range={res.in_range}, clause: {res.clause}, "
         f"negative_found={res.negative_found}, R={res.R_stable:.6g}, C={res.C:.6g})")
    if args.out and res.report is not None:
        write_csv(args.out, res.report.columns, res.report.rows())
    if res.verdict is GalleryVerdict.UNSUPPORTED:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if res.verdict is GalleryVerdict.CONSISTENT else EXIT_FAILS


_THEOREM_KEYS = {"m": int, "p": float, "p_bar": float, "kappa": float, "alpha": float, "mu": float, "chi": float,
                 "omega": float, "V_inf": float, "chi1": float, "chi2": float}


def _theorem_cases(cfg):
    s = cfg.section("theorems", required=True)
    if s.has("cases"):
        s.check({"cases"})
        cases = s.data["cases"]
        if not isinstance(cases, list):
            raise ConfigError("theorems.cases must be a list", *s.where("cases"))
        out = []
        for i in range(len(cases)):
            c = Section(cases[i], ("theorems", "cases", i), cfg.marks).check(set(_THEOREM_KEYS))
            out.append({k: c.get(k, t) for k, t in _THEOREM_KEYS.items() if c.has(k)})
        return out
    s.check(set(_THEOREM_KEYS))
    return [{k: s.get(k, t) for k, t in _THEOREM_KEYS.items() if s.has(k)}]


def _run_theorems(cases, out):
    from .verify import theorem_applicability

    rows = []
    for i, P in enumerate(cases):
        for v in theorem_applicability(P):
            rows.append((i, v.theorem, v.applicable, v.failed_clause or ""))
            _say(f"case {i} {v.theorem}: {'applicable' if v.applicable else 'not applicable'}"
                 + (f" (failed clause: {v.failed_clause})" if v.failed_clause else ""))
    if out:
        write_csv(out, ("case", "theorem", "applicable", "failed_clause"),
                  [(str(i), t, a, c) for i, t, a, c in rows])
    return EXIT_OK


def cmd_verify(args):
    cfg = _config(args)
    if args.mode == "residual":
        return _verify_residual(args, cfg)
    if args.mode == "counterexample":
        return _verify_counterexample(args, cfg)
    return _run_theorems(_theorem_cases(cfg), args.out)


def cmd_theorems(args):
    if args.config:
        return _run_theorems(_theorem_cases(_config(args)), args.out)
    P = {k: getattr(args, k) for k in _THEOREM_KEYS if getattr(args, k, None) is not None}
    missing = [k for k in ("alpha", "mu", "chi") if k not in P]
    if missing:
        raise ConfigError(f"missing flags: {', '.join('--' + m for m in missing)}")
    return _run_theorems([P], args.out)


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------

def cmd_model(args):
    from .model import green_kernel_model, radial_geometry

    cfg = _config(args)
    _, N, _ = _globals(args)
    model = build_model(cfg.section("model", required=True))
    r = _grid_nodes(cfg, N, (0.1, 10.0, 101))
    geo = radial_geometry(model, r)
    cols = ["r", "v", "V", "laplacian_r", "radial_curvature"]
    data = [r, geo.v, geo.V, geo.laplacian, geo.radial_curvature]
    if args.green_p is not None:
        cols.append("green")
        data.append(green_kernel_model(model, args.green_p, r))
    _say(f"model: {model!r} on {len(r)} nodes in [{r[0]:.6g}, {r[-1]:.6g}]")
    if args.out:
        write_csv(args.out, cols, zip(*data))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(sup):
    p = argparse.ArgumentParser(add_help=False)
    d = argparse.SUPPRESS if sup else None
    p.add_argument("--tol", type=float, default=d, help="tolerance override (env ARTIFACT_TOL)")
    p.add_argument("--grid", type=int, default=d, metavar="N", help="grid size override (env ARTIFACT_GRID)")
    p.add_argument("--seed", type=int, default=d, help="random seed for sweeps (env ARTIFACT_SEED)")
    return p


def build_parser():
    top = argparse.ArgumentParser(prog="artifact", parents=[_common(False)],
                                  description=__doc__.split("\n\n")[0])
    sub = top.add_subparsers(dest="command", required=True)
    common = _common(True)

    p = sub.add_parser("ko", parents=[common], help="Keller-Osserman verdict")
    p.add_argument("--family", choices=("plaplace", "mc"), default="plaplace")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--chi", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--endpoint", choices=("zero", "infinity"), default="zero")
    p.add_argument("--kind", choices=("standard", "mean_curvature"), default="standard")
    p.add_argument("--route", choices=("auto", "closed", "numeric"), default="auto")
    p.add_argument("--config")
    p.set_defaults(func=cmd_ko)

    p = sub.add_parser("bvp", parents=[common], help="two-point problem")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bvp)

    p = sub.add_parser("construct", parents=[common], help="certified supersolutions and potentials")
    p.add_argument("--kind", choices=tuple(_KINDS))
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", parents=[common], help="residuals, counterexamples, theorem clauses")
    p.add_argument("mode", choices=("residual", "counterexample", "theorems"))
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("theorems", parents=[common], help="theorem applicability")
    for k, t in _THEOREM_KEYS.items():
        p.add_argument("--" + k.replace("_", "-"), dest=k, type=t)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_theorems)

    p = sub.add_parser("model", parents=[common], help="radial geometry of a model manifold")
    p.add_argument("--config", required=True)
    p.add_argument("--green-p", type=float, dest="green_p")
    p.add_argument("--out")
    p.set_defaults(func=cmd_model)
    return top


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors, which would read as Inconclusive
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    try:
        return int(args.func(args))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArtifactError, ArithmeticError, ValueError, RuntimeError) as e:
        print(f"computation failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_COMPUTE


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
