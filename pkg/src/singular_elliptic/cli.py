"""Command-line surface: eigen, solve, sweep, and verify subcommands.

Instances are described by flags or by a plain-text ``key: value`` config file
(flags win on conflict); every accepted configuration can be re-emitted with
``--print-config`` and re-parsed to an equivalent run. All default code paths
are deterministic; the verify suite draws its random probes from a fixed seed
that the SING_ELLIPTIC_SEED environment variable overrides.

Exit codes: 0 success, 1 solver failure, 2 configuration error, 3 verify failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import model, oracle, sweep as sweep_mod
from .energy import make_context, regularized_energy
from .grid import Interval, Rectangle, assemble_operators, build_grid
from .model import AffineSublinear, ConstantWeight, DistPowWeight, Linear, NodalWeight
from .solver import SolverPolicy, check_solution, solve_at
from .spectral import lambda_star, principal_eigenpair

SEED_ENV_VAR = "SING_ELLIPTIC_SEED"


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# option tables: (key, type, default-as-string-or-None, help)
# ---------------------------------------------------------------------------

_INSTANCE_OPTS = [
    ("domain", str, "interval:0:1", "domain preset: interval:<lo>:<hi> or rectangle:<lx>:<ly>"),
    ("n", int, "256", "interior nodes per axis (>= 3)"),
    ("gamma", float, "0.5", "singular exponent (> 0)"),
    ("weight", str, "constant:1", "weight: constant:<c> | distpow:<eta>[:<scale>] | file:<path>"),
    ("f", str, "linear", "nonlinearity: linear | affine:<a>:<r>"),
]

_POLICY_OPTS = [
    ("tol_residual", float, "1e-10", "scaled-residual tolerance"),
    ("max_newton", int, "200", "newton iteration cap per smoothing stage"),
    ("norm_cap", float, "1e6", "norm threshold for the divergence classification"),
]

_SUBCOMMAND_OPTS = {
    "eigen": _INSTANCE_OPTS[:2] + [_INSTANCE_OPTS[4]] + [
        ("tol", float, "1e-12", "eigenvalue iteration tolerance"),
        ("dump_phi", str, None, "write nodal eigenfunction values to this path"),
    ],
    "solve": _INSTANCE_OPTS + _POLICY_OPTS + [
        ("lambda_frac", float, None, "lambda as a fraction of the critical value"),
        ("lambda", float, None, "absolute lambda (alternative to --lambda-frac)"),
        ("allow_super", bool, "false", "permit lambda at or above the critical value"),
        ("dump", str, None, "write nodal solution values to this path"),
    ],
    "sweep": _INSTANCE_OPTS + _POLICY_OPTS + [
        ("points", int, "40", "number of lambda grid points"),
        ("top_frac", float, "0.999", "top of the lambda grid as a fraction of critical (in (0,1))"),
        ("out", str, None, "CSV output path (stdout when omitted)"),
        ("parallel", bool, "false", "solve the grid points independently in a thread pool"),
    ],
    "verify": [
        ("seed", int, None, f"seed for the random probes (default 0; {SEED_ENV_VAR} overrides)"),
    ],
}


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singular-elliptic",
        description="Variational solver for singular semilinear elliptic problems.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, opts in _SUBCOMMAND_OPTS.items():
        sub = subs.add_parser(name)
        sub.add_argument("--config", type=str, default=None, help="key: value config file")
        sub.add_argument(
            "--print-config", action="store_true", help="print the merged config and exit"
        )
        for key, typ, _default, help_text in opts:
            dest = "lambda_abs" if key == "lambda" else key
            if typ is bool:
                sub.add_argument(_flag(key), dest=dest, action="store_const", const="true",
                                 default=None, help=help_text)
            else:
                sub.add_argument(_flag(key), dest=dest, type=str, default=None, help=help_text)
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    out = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if ":" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key: value'")
        key, _, value = stripped.partition(":")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: expected 'key: value'")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        out[key] = value
    return out


def _merge_config(command: str, args: argparse.Namespace) -> dict[str, str]:
    opts = _SUBCOMMAND_OPTS[command]
    known = {key for key, *_ in opts}
    merged = {key: default for key, _typ, default, _h in opts if default is not None}
    if args.config:
        file_cfg = _read_config_file(args.config)
        for key, value in file_cfg.items():
            if key == "command":
                if value != command:
                    raise ConfigError(
                        f"config file is for '{value}' but subcommand is '{command}'"
                    )
                continue
            if key not in known:
                raise ConfigError(f"unknown config key '{key}' for subcommand {command}")
            merged[key] = value
    for key, _typ, _default, _h in opts:
        dest = "lambda_abs" if key == "lambda" else key
        flag_value = getattr(args, dest)
        if flag_value is not None:
            merged[key] = flag_value
    return merged


def _typed(command: str, cfg: dict[str, str]) -> dict:
    """Convert the canonical string config to typed values."""
    out = {}
    for key, typ, _default, _h in _SUBCOMMAND_OPTS[command]:
        if key not in cfg:
            out[key] = None
            continue
        raw = cfg[key]
        try:
            if typ is bool:
                if raw not in ("true", "false"):
                    raise ValueError("expected true or false")
                out[key] = raw == "true"
            else:
                out[key] = typ(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for '{key}': {raw!r} ({exc})")
    return out


def _print_config(command: str, cfg: dict[str, str]) -> None:
    print(f"command: {command}")
    for key, *_ in _SUBCOMMAND_OPTS[command]:
        if key in cfg:
            print(f"{key}: {cfg[key]}")


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------


def _parse_domain(spec: str):
    parts = spec.split(":")
    try:
        if parts[0] == "interval" and len(parts) == 3:
            return Interval(float(parts[1]), float(parts[2]))
        if parts[0] in ("rectangle", "rect") and len(parts) == 3:
            return Rectangle(float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ConfigError(f"bad domain '{spec}': {exc}")
    raise ConfigError(f"bad domain '{spec}': expected interval:<lo>:<hi> or rectangle:<lx>:<ly>")


def _parse_weight(spec: str, grid):
    parts = spec.split(":")
    try:
        if parts[0] == "constant" and len(parts) == 2:
            return ConstantWeight(float(parts[1]))
        if parts[0] == "distpow" and len(parts) in (2, 3):
            scale = float(parts[2]) if len(parts) == 3 else 1.0
            return DistPowWeight(float(parts[1]), scale)
        if parts[0] == "file" and len(parts) >= 2:
            path = spec.partition(":")[2]
            values = _read_nodal_file(path, grid.m)
            return NodalWeight(grid.function(values))
    except (ValueError, OSError) as exc:
        raise ConfigError(f"bad weight '{spec}': {exc}")
    raise ConfigError(
        f"bad weight '{spec}': expected constant:<c> | distpow:<eta>[:<scale>] | file:<path>"
    )


def _read_nodal_file(path: str, m: int) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append(float(line.split()[-1]))
    if len(rows) != m:
        raise ConfigError(f"{path}: expected {m} nodal values, found {len(rows)}")
    return np.asarray(rows)


def _parse_f(spec: str):
    parts = spec.split(":")
    try:
        if parts[0] == "linear" and len(parts) == 1:
            return Linear()
        if parts[0] == "affine" and len(parts) == 3:
            return AffineSublinear(float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ConfigError(f"bad nonlinearity '{spec}': {exc}")
    raise ConfigError(f"bad nonlinearity '{spec}': expected linear | affine:<a>:<r>")


def _policy_from(cfg: dict) -> SolverPolicy:
    try:
        return SolverPolicy(
            tol_residual=cfg["tol_residual"],
            max_newton=cfg["max_newton"],
            norm_cap=cfg["norm_cap"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _dump_nodal(path: str, grid, values: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        for point, value in zip(grid.points, values):
            coords = " ".join(f"{c:.17g}" for c in point)
            fh.write(f"{coords} {value:.17g}\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_eigen(cfg: dict) -> int:
    try:
        grid = build_grid(_parse_domain(cfg["domain"]), cfg["n"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    f = _parse_f(cfg["f"])
    ops = assemble_operators(grid)
    eig = principal_eigenpair(ops, tol=cfg["tol"])
    lam_star = lambda_star(eig.delta1, f.theta)
    print(f"delta1 {eig.delta1:.17g}")
    print(f"theta {f.theta:.17g}")
    print(f"lambda_star {lam_star:.17g}")
    if cfg["dump_phi"]:
        _dump_nodal(cfg["dump_phi"], grid, eig.phi1.values)
    return 0


def _instance_context(cfg: dict, lam: float = 0.0):
    try:
        grid = build_grid(_parse_domain(cfg["domain"]), cfg["n"])
        gamma = model.as_exponent(cfg["gamma"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    weight = _parse_weight(cfg["weight"], grid)
    f = _parse_f(cfg["f"])
    ops = assemble_operators(grid)
    eig = principal_eigenpair(ops)
    if not model.weight_admissible(weight, gamma, eig.phi1):
        raise ConfigError(
            f"weight {cfg['weight']} is not admissible for gamma={gamma.gamma:g}"
        )
    try:
        ctx = make_context(ops, gamma, weight, f, lam)
    except ValueError as exc:
        raise ConfigError(str(exc))
    return ctx, eig


def _cmd_solve(cfg: dict) -> int:
    if (cfg["lambda_frac"] is None) == (cfg["lambda"] is None):
        raise ConfigError("exactly one of --lambda-frac / --lambda is required")
    ctx, eig = _instance_context(cfg)
    lam_star_val = lambda_star(eig.delta1, ctx.f.theta)
    lam = cfg["lambda"] if cfg["lambda"] is not None else cfg["lambda_frac"] * lam_star_val
    if lam < 0.0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    if lam >= lam_star_val and not cfg["allow_super"]:
        raise ConfigError(
            f"lambda {lam:g} is at or above the critical value {lam_star_val:g}; "
            "pass --allow-super to probe non-existence"
        )
    outcome = solve_at(ctx.with_lambda(lam), _policy_from(cfg))
    print(f"status {outcome.status}")
    print(f"lambda {lam:.17g}")
    print(f"lambda_star {lam_star_val:.17g}")
    if outcome.converged:
        d = outcome.diagnostics
        print(f"energy {d.energy:.17g}")
        print(f"h1 {d.h1:.17g}")
        print(f"nehari {d.nehari:.17g}")
        print(f"min_u_over_d {d.min_u_over_d:.17g}")
        print(f"iterations {d.iterations}")
        if cfg["dump"]:
            _dump_nodal(cfg["dump"], ctx.grid, outcome.u.values)
    else:
        print(f"reason {outcome.reason}")
    return 1 if outcome.status == "failed" else 0


def _cmd_sweep(cfg: dict) -> int:
    ctx, eig = _instance_context(cfg)
    lam_star_val = lambda_star(eig.delta1, ctx.f.theta)
    try:
        plan = sweep_mod.default_plan(
            lam_star_val, points=cfg["points"], top_fraction=cfg["top_frac"],
            policy=_policy_from(cfg),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))
    records = sweep_mod.run_sweep(ctx, plan, parallel=cfg["parallel"])
    if cfg["out"]:
        sweep_mod.emit_csv(records, cfg["out"])
    else:
        print(sweep_mod.CSV_HEADER)
        for r in records:
            print(
                f"{r.lam:.17g},{r.h1:.17g},{r.energy:.17g},{r.intF:.17g},"
                f"{r.nehari:.17g},{r.iterations},{r.status}"
            )
    failed = sum(1 for r in records if r.status == "failed")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# verify suite
# ---------------------------------------------------------------------------


def _verify_instance(gamma: float, n: int):
    grid = build_grid(Interval(0.0, 1.0), n)
    ops = assemble_operators(grid)
    eig = principal_eigenpair(ops)
    weight = ConstantWeight(1.0) if gamma <= 1.0 else DistPowWeight(0.8)
    ctx = make_context(ops, gamma, weight, Linear(), 0.0)
    lam_star_val = lambda_star(eig.delta1, 1.0)
    return ctx, eig, lam_star_val


def _check_oracle_equivalence(results: list) -> None:
    ctx, _eig, lam_star_val = _verify_instance(0.5, 65)
    ctx = ctx.with_lambda(0.5 * lam_star_val)
    policy = SolverPolicy()
    out = solve_at(ctx, policy)
    ok = out.converged
    detail = f"status={out.status}"
    if ok:
        ref = oracle.brute_force_minimize(ctx, policy.final_eps)
        sup = float(np.max(np.abs(out.u.values - ref.values)))
        de = abs(
            regularized_energy(ctx, out.u, policy.final_eps)
            - regularized_energy(ctx, ref, policy.final_eps)
        )
        ok = sup <= 1e-6 and de <= 1e-10
        detail = f"sup_diff={sup:.3e}, energy_diff={de:.3e}"
    results.append(("oracle-equivalence", ok, detail))


def _check_scaling_closed_form(results: list, rng: np.random.Generator) -> None:
    from .energy import t_star

    for gamma in (0.5, 1.5):
        ctx, _eig, lam_star_val = _verify_instance(gamma, 65)
        ctx = ctx.with_lambda(0.5 * lam_star_val)
        worst_t = worst_v = 0.0
        signs_ok = True
        for _ in range(20):
            u = rng.uniform(0.2, 1.2, ctx.grid.m)
            t_cf, j_cf = t_star(ctx, u)
            t_sc, j_sc = oracle.scalar_psi_min(ctx, u)
            worst_t = max(worst_t, abs(t_cf - t_sc) / abs(t_cf))
            worst_v = max(worst_v, abs(j_cf - j_sc) / abs(j_cf))
            signs_ok = signs_ok and (j_cf < 0.0 if gamma < 1.0 else j_cf > 0.0)
        ok = worst_t <= 1e-6 and worst_v <= 1e-6 and signs_ok
        results.append(
            (
                f"closed-form-scaling gamma={gamma}",
                ok,
                f"max_rel_t={worst_t:.3e}, max_rel_value={worst_v:.3e}, signs_ok={signs_ok}",
            )
        )


def _check_denergy_dlambda(results: list) -> None:
    for gamma in (0.5, 1.5):
        ctx, _eig, lam_star_val = _verify_instance(gamma, 129)
        check = sweep_mod.didlambda_check(ctx, 0.5 * lam_star_val, 1e-3 * lam_star_val)
        ok = check.rel_err <= 1e-3 and check.rhs < 0.0
        results.append(
            (
                f"denergy-dlambda gamma={gamma}",
                ok,
                f"lhs={check.lhs:.6e}, rhs={check.rhs:.6e}, rel_err={check.rel_err:.3e}",
            )
        )


def _check_monotonicity(results: list, rng: np.random.Generator) -> None:
    ctx, _eig, lam_star_val = _verify_instance(0.5, 65)
    policy = SolverPolicy()
    fracs = (0.1, 0.3, 0.5, 0.7, 0.9)
    solutions = []
    warm = None
    ok = True
    for frac in fracs:
        out = solve_at(ctx.with_lambda(frac * lam_star_val), policy, warm)
        ok = ok and out.converged
        if not out.converged:
            break
        solutions.append(out.u.values)
        warm = out.u
    worst = 0.0
    if ok:
        for lower, upper in zip(solutions, solutions[1:]):
            worst = max(worst, float(np.max(lower - upper)))
        ok = worst <= 1e-9
    results.append(("branch-monotonicity", ok, f"max_violation={worst:.3e}"))

    mid = ctx.with_lambda(0.5 * lam_star_val)
    endpoints = []
    ok = True
    for _ in range(5):
        warm_start = ctx.grid.function(rng.uniform(0.05, 2.0, ctx.grid.m))
        out = solve_at(mid, policy, warm_start)
        ok = ok and out.converged
        if out.converged:
            endpoints.append(out.u.values)
    spread = 0.0
    if ok:
        for i in range(len(endpoints)):
            for j in range(i + 1, len(endpoints)):
                spread = max(spread, float(np.max(np.abs(endpoints[i] - endpoints[j]))))
        ok = spread <= 1e-7
    results.append(("multi-start-uniqueness", ok, f"max_spread={spread:.3e}"))


def _cmd_verify(cfg: dict) -> int:
    seed = cfg["seed"]
    if seed is None:
        seed = int(os.environ.get(SEED_ENV_VAR, "0"))
    rng = np.random.default_rng(seed)
    results: list[tuple[str, bool, str]] = []
    _check_oracle_equivalence(results)
    _check_scaling_closed_form(results, rng)
    _check_denergy_dlambda(results)
    _check_monotonicity(results, rng)
    failures = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    print(f"verify: {len(results)} checks, {failures} failures (seed={seed})")
    return 3 if failures else 0


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

_DISPATCH = {
    "eigen": _cmd_eigen,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg_strings = _merge_config(args.command, args)
        if args.print_config:
            _print_config(args.command, cfg_strings)
            return 0
        cfg = _typed(args.command, cfg_strings)
        return _DISPATCH[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
