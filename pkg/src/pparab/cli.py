"""Command line interface.

Eight batch subcommands (no daemon mode, no plotting): fundamental-check,
divstruct-test, cert, region-map, solve, verify-estimate, counterexample,
threshold-scan.  Flags override --config values, which override defaults.

Exit codes: 0 success; 1 domain failure (a certification that comes back
not-ok, a blown-up solve, a failed identity check); 2 usage error (bad flags
or malformed config) with a one-line hint; 3 I/O trouble.

All randomness flows from one seeded splitmix64 stream, so equal --seed means
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .errors import BlowupError, BoundaryError, RangeError, ZeroGradientError
from .estimates import (
    CylinderSpec,
    default_test_functions,
    divergence_structure_residual,
    estimate_report,
    key_inequality_report,
    sobolev_threshold_scan,
)
from .fields import Grid2, ScalarField, fundamental_gap_many
from .params import Params, theorem_case, validate
from .quadform import (
    DEFAULT_ETA,
    CertReport,
    Weights,
    certify_uniform,
    region_map,
    region_map_csv,
    weights_case_i,
    weights_case_ii,
    weights_smooth,
    x1x2_bounds,
)
from .rng import SplitMix64
from .solver import SolveConfig, exact_counterexample, sine_initial, solve


class ConfigError(Exception):
    """Malformed or insufficient configuration; maps to exit code 2."""


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        text = fh.read()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return cfg


def _pick(flag_val, cfg: dict, key: str, default=None):
    if flag_val is not None:
        return flag_val
    if key in cfg:
        return cfg[key]
    return default


def _build_params(args, cfg: dict) -> Params:
    pc = cfg.get("params", {})
    if not isinstance(pc, dict):
        raise ConfigError("config key 'params' must be an object")
    p = _pick(getattr(args, "p", None), pc, "p")
    gamma = _pick(getattr(args, "gamma", None), pc, "gamma")
    if p is None or gamma is None:
        raise ConfigError("p and gamma are required (flags -p/-g or config params)")
    p = float(p)
    gamma = float(gamma)
    s = _pick(getattr(args, "s", None), pc, "s", 2.0 - p)
    epsilon = _pick(getattr(args, "epsilon", None), pc, "epsilon", 1e-2)
    n = int(pc.get("n", 2))
    params = Params(n=n, p=p, gamma=gamma, s=float(s), epsilon=float(epsilon))
    validate(params)
    return params


def _build_grid(args, cfg: dict, required: bool) -> Grid2 | None:
    gc = cfg.get("grid")
    nx_flag = getattr(args, "nx", None)
    if gc is None and nx_flag is None:
        if required:
            raise ConfigError("a grid is required: pass --nx or a config with a grid object")
        return None
    if gc is not None:
        if not isinstance(gc, dict):
            raise ConfigError("config key 'grid' must be an object")
        try:
            nx = int(gc["nx"]) if nx_flag is None else int(nx_flag)
            ny = int(gc.get("ny", nx))
            hx = float(gc["hx"])
            hy = float(gc.get("hy", hx))
            x0 = float(gc.get("x0", 0.0))
            y0 = float(gc.get("y0", 0.0))
        except KeyError as exc:
            raise ConfigError(f"grid object is missing key {exc}") from exc
        if nx_flag is not None and "hx" in gc:
            # --nx on top of an explicit grid keeps the extent, not the spacing
            hx = (float(gc["hx"]) * (int(gc["nx"]) - 1)) / (nx - 1)
            hy = (float(gc.get("hy", gc["hx"])) * (int(gc.get("ny", gc["nx"])) - 1)) / (ny - 1)
        return Grid2(nx, ny, hx, hy, x0, y0)
    nx = int(nx_flag)
    h = 1.0 / (nx - 1)
    return Grid2(nx, nx, h, h, 0.0, 0.0)


def _resolve_weights(spec_val, params: Params, eta: float) -> tuple[str, Weights]:
    if spec_val is None or spec_val == "case_ii":
        return ("case_ii", weights_case_ii(params.p, params.gamma, strict=False))
    if spec_val == "case_i":
        return ("case_i", weights_case_i(params.p, params.gamma, eta))
    if spec_val == "smooth":
        return ("smooth", weights_smooth(params.n, params.p, params.gamma, params.s))
    if isinstance(spec_val, dict):
        try:
            return ("explicit", Weights(
                float(spec_val["w1"]), float(spec_val["w2"]),
                float(spec_val["w3"]), float(spec_val["w4"]),
            ))
        except KeyError as exc:
            raise ConfigError(f"weights object is missing key {exc}") from exc
    raise ConfigError(f"weights must be case_i, case_ii, smooth or an object (got {spec_val!r})")


def _report_dict(rep: CertReport) -> dict:
    return json.loads(rep.to_json())


def _emit(text: str, out_path: str | None) -> None:
    sys.stdout.write(text)
    if not text.endswith("\n"):
        sys.stdout.write("\n")
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------- subcommands


def _cmd_fundamental_check(args) -> int:
    rng = SplitMix64(args.seed)
    samples = args.samples
    dims = {}
    ok = True
    for n in (2, 3, 4, 5):
        gs = rng.uniforms_in(samples * n, -1.0, 1.0).reshape(samples, n)
        bad = np.einsum("mi,mi->m", gs, gs) < 1e-12
        while bad.any():
            gs[bad] = rng.uniforms_in(int(bad.sum()) * n, -1.0, 1.0).reshape(-1, n)
            bad = np.einsum("mi,mi->m", gs, gs) < 1e-12
        m_entries = n * (n + 1) // 2
        tri = rng.uniforms_in(samples * m_entries, -1.0, 1.0).reshape(samples, m_entries)
        Hs = np.zeros((samples, n, n))
        iu = np.triu_indices(n)
        Hs[:, iu[0], iu[1]] = tri
        # mirror the strict upper triangle to make each draw symmetric
        Hs = Hs + np.transpose(np.triu(Hs, 1), (0, 2, 1))
        scale = 1.0 + np.einsum("mij,mij->m", Hs, Hs)
        gaps = fundamental_gap_many(gs, Hs) / scale
        worst = float(np.min(gaps))
        entry = {"worst_normalized_gap": worst}
        if n == 2:
            entry["max_abs_normalized_gap"] = float(np.max(np.abs(gaps)))
            if entry["max_abs_normalized_gap"] > 1e-12:
                ok = False
        if worst < -1e-12:
            ok = False
        dims[str(n)] = entry
    out = {"samples": samples, "seed": args.seed, "dims": dims, "ok": ok}
    _emit(json.dumps(out, indent=2), args.out)
    return 0 if ok else 1


def _cmd_divstruct_test(args) -> int:
    params = Params(n=2, p=3.0, gamma=0.0, s=-1.0, epsilon=args.epsilon if args.epsilon is not None else 1e-2)
    hs = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
    cases = []
    min_order = math.inf
    ok = True
    for func in default_test_functions():
        for which in ("GD1", "GD2"):
            for ab in (-2.0, 0.0, 2.0):
                res = [divergence_structure_residual(func, params, which, ab, h) for h in hs]
                floor = max(res) < 1e-11
                if floor:
                    order = math.inf
                else:
                    order = min(
                        math.log2(res[i] / res[i + 1]) for i in range(len(res) - 1)
                    )
                    min_order = min(min_order, order)
                    if order < 1.0:
                        ok = False
                cases.append({
                    "func": func.name, "which": which, "ab": ab,
                    "residuals": res,
                    "order": None if floor else order,
                })
    out = {
        "grids": [int(round(1.0 / h)) + 1 for h in hs],
        "min_order": None if math.isinf(min_order) else min_order,
        "ok": ok,
        "cases": cases,
    }
    _emit(json.dumps(out, indent=2), args.out)
    return 0 if ok else 1


def _cmd_cert(args) -> int:
    cfg = _load_config(args.config)
    params = _build_params(args, cfg)
    eta = float(_pick(args.eta, cfg, "eta", DEFAULT_ETA))
    floor = cfg.get("floor")
    floor = float(floor) if floor is not None else None
    out: dict = {"p": params.p, "gamma": params.gamma, "s": params.s,
                 "theorem_case": theorem_case(params.p, params.gamma).value}
    all_ok = True
    if "weights" in cfg:
        kind, w = _resolve_weights(cfg["weights"], params, eta)
        rep = certify_uniform(w, params, floor)
        out["weights_kind"] = kind
        out["weights"] = {"w1": w.w1, "w2": w.w2, "w3": w.w3, "w4": w.w4}
        out["report"] = _report_dict(rep)
        all_ok = rep.ok
    else:
        w2 = weights_case_ii(params.p, params.gamma, strict=False)
        rep2 = certify_uniform(w2, params, floor)
        out["case_ii"] = _report_dict(rep2)
        all_ok = rep2.ok
        if -1.0 < params.gamma < 1.0:
            sup_x1, inf_x2, _ = x1x2_bounds(params.p, params.gamma)
            margin = inf_x2 - sup_x1
            out["case_i_admissible"] = margin > 0.0
            if margin > 0.0:
                w1 = weights_case_i(params.p, params.gamma, min(eta, 0.5 * margin))
                rep1 = certify_uniform(w1, params, floor)
                out["case_i"] = _report_dict(rep1)
                all_ok = all_ok and rep1.ok
        else:
            out["case_i_admissible"] = False
    out["ok"] = all_ok
    _emit(json.dumps(out, indent=2), args.out)
    return 0 if all_ok else 1


def _default_region_grids(cfg: dict):
    rg = cfg.get("p_grid", {})
    gg = cfg.get("gamma_grid", {})
    p_count = int(rg.get("count", 141))
    p_start = float(rg.get("start", 1.0 + 7.0 / 141.0))
    p_stop = float(rg.get("stop", 8.0))
    g_count = int(gg.get("count", 100))
    g_start = float(gg.get("start", -0.99))
    g_stop = float(gg.get("stop", 1.49))
    return np.linspace(p_start, p_stop, p_count), np.linspace(g_start, g_stop, g_count)


def _cmd_region_map(args) -> int:
    cfg = _load_config(args.config)
    p_grid, gamma_grid = _default_region_grids(cfg)
    floor = cfg.get("floor")
    floor = float(floor) if floor is not None else None
    eta = float(_pick(args.eta, cfg, "eta", DEFAULT_ETA))
    rows = region_map(p_grid, gamma_grid, s=args.s, floor=floor, eta=eta)
    _emit(region_map_csv(rows), args.out)
    return 0


def _cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    grid = _build_grid(args, cfg, required=True)
    params = _build_params(args, cfg)
    cfl = float(cfg.get("cfl", 0.2))
    t0 = float(cfg.get("t0", 0.0))
    t_end = float(cfg.get("t_end", 0.01))
    checkpoints = int(cfg.get("checkpoints", 11))
    if checkpoints < 2:
        raise ConfigError("checkpoints must be >= 2")
    config = SolveConfig(grid=grid, t0=t0, t_end=t_end, cfl=cfl,
                         epsilon=params.epsilon, params=params)
    init_cfg = cfg.get("initial", {})
    kind = init_cfg.get("kind", "sine")
    if kind == "sine":
        initial, boundary = sine_initial(
            grid, float(init_cfg.get("amplitude", 0.25)), float(init_cfg.get("drift", 0.5))
        )
    elif kind == "counterexample":
        _, _, u = exact_counterexample(params.p, params.gamma)
        X, Y = np.meshgrid(grid.xs(), grid.ys(), indexing="ij")
        initial = ScalarField(grid, u(X, Y, t0))
        boundary = u
    elif kind == "constant":
        level = float(init_cfg.get("level", 0.0))
        initial = ScalarField(grid, np.full((grid.nx, grid.ny), level))
        boundary = lambda x, y, t: np.full(np.shape(x), level)
    else:
        raise ConfigError(f"initial.kind must be sine, counterexample or constant (got {kind!r})")
    if args.out is None:
        raise ConfigError("solve needs --out <directory> for the checkpoint CSVs")
    times = np.linspace(t0, t_end, checkpoints)
    traj = solve(initial, boundary, config, times)
    os.makedirs(args.out, exist_ok=True)
    for k, sl in enumerate(traj.slices):
        sl.save(os.path.join(args.out, f"checkpoint_{k:03d}.csv"))
    with open(os.path.join(args.out, "times.csv"), "w") as fh:
        fh.write("k,t\n")
        for k, t in enumerate(traj.times):
            fh.write(f"{k},{float(t)!r}\n")
    print(json.dumps({
        "checkpoints": len(traj.slices),
        "t0": t0, "t_end": t_end,
        "out": args.out,
    }, indent=2))
    return 0


def _cmd_verify_estimate(args) -> int:
    cfg = _load_config(args.config)
    params = _build_params(args, cfg)
    nx_flag = args.nx
    if nx_flag is None and "grid" not in cfg:
        nx_flag = 65
    grid = _build_grid(argparse.Namespace(nx=nx_flag), cfg, required=True)
    cc = cfg.get("cylinder", {})
    r = float(_pick(args.r, cc, "r", 0.15))
    cx = float(cc.get("x0", 0.5 * (grid.x0 + grid.x_max)))
    cy = float(cc.get("y0", 0.5 * (grid.y0 + grid.y_max)))
    ct = float(cc.get("t0", 4.5 * r * r))
    spec = CylinderSpec(x0=cx, y0=cy, t0=ct, r=r)
    eta = float(_pick(args.eta, cfg, "eta", DEFAULT_ETA))
    kind, w = _resolve_weights(cfg.get("weights"), params, eta)
    floor = cfg.get("floor")
    floor = float(floor) if floor is not None else None
    rep = certify_uniform(w, params, floor)

    cfl = float(cfg.get("cfl", 0.2))
    t0 = float(cfg.get("t0", 0.0))
    t_end = float(cfg.get("t_end", max(ct, 4.2 * r * r)))
    checkpoints = int(cfg.get("checkpoints", 21))
    config = SolveConfig(grid=grid, t0=t0, t_end=t_end, cfl=cfl,
                         epsilon=params.epsilon, params=params)
    init_cfg = cfg.get("initial", {})
    initial, boundary = sine_initial(
        grid, float(init_cfg.get("amplitude", 0.25)), float(init_cfg.get("drift", 1.0))
    )
    traj = solve(initial, boundary, config, np.linspace(t0, t_end, checkpoints))
    est = estimate_report(traj, params, spec, params.s)
    key = key_inequality_report(traj, w, rep.lambda_, params)
    out = {
        "params": json.loads(params.to_json()),
        "cylinder": {"x0": cx, "y0": cy, "t0": ct, "r": r},
        "weights_kind": kind,
        "weights": {"w1": w.w1, "w2": w.w2, "w3": w.w3, "w4": w.w4},
        "cert": _report_dict(rep),
        "estimate": json.loads(est.to_json()),
        "key_inequality": key,
        "ok": rep.ok,
    }
    print(json.dumps(out, indent=2))
    if args.out:
        header = ("p,gamma,s,epsilon,nx,r,lhs,rhs_grad,rhs_power,log_bulk,log_slice,"
                  "c_emp,ut_l2,d2u_l2,violation_fraction")
        row = ",".join(repr(v) for v in (
            params.p, params.gamma, params.s, params.epsilon, float(grid.nx), r,
            est.lhs, est.rhs_grad, est.rhs_power, est.log_bulk, est.log_slice,
            est.c_emp, est.ut_l2, est.d2u_l2, key["violation_fraction"],
        ))
        fresh = not os.path.exists(args.out)
        with open(args.out, "a") as fh:
            if fresh:
                fh.write(header + "\n")
            fh.write(row + "\n")
    return 0 if rep.ok else 1


def _cmd_counterexample(args) -> int:
    cfg = _load_config(args.config)
    params = _build_params(args, cfg)
    alpha, C, _ = exact_counterexample(params.p, params.gamma)
    rng = SplitMix64(args.seed)
    m = args.samples
    x = rng.uniforms_in(m, 0.05, 1.2) * np.where(rng.uniforms(m) < 0.5, -1.0, 1.0)
    grad = alpha * np.abs(x) ** (alpha - 1.0)
    lap = alpha * (alpha - 1.0) * np.abs(x) ** (alpha - 2.0)
    rhs = grad**params.gamma * (params.p - 1.0) * lap
    residual = float(np.max(np.abs(rhs - C)))
    ok = residual <= 1e-10 * max(1.0, C)
    out = {
        "p": params.p, "gamma": params.gamma,
        "alpha": alpha, "C": C,
        "samples": m, "seed": args.seed,
        "max_abs_residual": residual,
        "ok": ok,
    }
    _emit(json.dumps(out, indent=2), args.out)
    return 0 if ok else 1


def _cmd_threshold_scan(args) -> int:
    cfg = _load_config(args.config)
    params = _build_params(args, cfg)
    thr = params.gamma + 1.0 - params.p
    s_list = thr + np.linspace(-1.0, 1.0, 41)
    rows = sobolev_threshold_scan(params.p, params.gamma, s_list)
    lines = ["s,exponent,integrable,diverges_numeric,partial"]
    for row in rows:
        lines.append(",".join([
            repr(row["s"]), repr(row["exponent"]),
            "true" if row["integrable"] else "false",
            "true" if row["diverges_numeric"] else "false",
            repr(row["partial"]),
        ]))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# -------------------------------------------------------------------- parser


def _add_common(sp, *names):
    if "config" in names:
        sp.add_argument("--config", help="JSON config file")
    if "out" in names:
        sp.add_argument("--out", help="output path")
    if "p" in names:
        sp.add_argument("-p", "--p", type=float, dest="p")
    if "gamma" in names:
        sp.add_argument("-g", "--gamma", type=float, dest="gamma")
    if "s" in names:
        sp.add_argument("-s", type=float, dest="s")
    if "epsilon" in names:
        sp.add_argument("--epsilon", type=float)
    if "nx" in names:
        sp.add_argument("--nx", type=int)
    if "r" in names:
        sp.add_argument("--r", type=float)
    if "eta" in names:
        sp.add_argument("--eta", type=float)
    if "seed" in names:
        sp.add_argument("--seed", type=int, default=0)
    if "samples" in names:
        sp.add_argument("--samples", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pparab",
        description="Solver and algebraic certifier for the regularized general "
                    "p-parabolic flow.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("fundamental-check",
                        help="random-sample the Hessian decomposition inequality")
    _add_common(sp, "out", "seed", "samples")
    sp.set_defaults(func=_cmd_fundamental_check)

    sp = sub.add_parser("divstruct-test",
                        help="h-refinement check of both divergence identities")
    _add_common(sp, "out", "epsilon")
    sp.set_defaults(func=_cmd_divstruct_test)

    sp = sub.add_parser("cert", help="certify uniform positivity of the weighted combination")
    _add_common(sp, "config", "out", "p", "gamma", "s", "eta")
    sp.set_defaults(func=_cmd_cert)

    sp = sub.add_parser("region-map", help="certification sweep over a (p, gamma) grid")
    _add_common(sp, "config", "out", "s", "eta")
    sp.set_defaults(func=_cmd_region_map)

    sp = sub.add_parser("solve", help="march the flow and write checkpoint CSVs")
    _add_common(sp, "config", "out", "p", "gamma", "s", "epsilon", "nx")
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("verify-estimate",
                        help="solve, certify, and audit the integral estimate on a cylinder")
    _add_common(sp, "config", "out", "p", "gamma", "s", "epsilon", "nx", "r", "eta")
    sp.set_defaults(func=_cmd_verify_estimate)

    sp = sub.add_parser("counterexample", help="exact kink solution and residual sampling")
    _add_common(sp, "config", "out", "p", "gamma", "seed", "samples")
    sp.set_defaults(func=_cmd_counterexample)

    sp = sub.add_parser("threshold-scan", help="integrability threshold sweep in s")
    _add_common(sp, "config", "out", "p", "gamma")
    sp.set_defaults(func=_cmd_threshold_scan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if getattr(args, "samples", None) is None and hasattr(args, "samples"):
        args.samples = 100000 if args.command == "fundamental-check" else 1000
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (RangeError, ZeroGradientError, BlowupError, BoundaryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
