"""Command-line driver.

Usage: micromorph --config run.cfg [--seed N] [--out DIR]
                  [--backend spectral|fd2] [--grid N] [--quiet]

The config file is flat key = value text selecting one command
(simulate, dispersion, statics, reduce, identities, params-check) plus the
command's options; material parameters live in a separate file referenced
by the `material` key.  Exit codes: 0 success, 1 inadmissible parameters
(report printed), 2 numerical failure or invalid configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .dynamics import estimate_stable_dt, random_state, run
from .dispersion import branches, detect_band_gaps, write_branches_csv, write_gap_report
from .errors import (
    InadmissibleParams,
    MicromorphError,
    NoConvergence,
    SingularProblem,
    UnstableTimestep,
)
from .fields import Grid, TensorField, VectorField, project_divergence_free, random_band_limited, save_field
from .identities import format_summary, run_identity_suite
from .materials import check_admissible, load_material_params
from .reductions import (
    map_cowin_nunziato,
    map_eringen_claus,
    map_popov_kroener,
    teisseyre_einstein,
)
from .statics import StaticProblem, solve_lazar, solve_static_relaxed

COMMANDS = ("simulate", "dispersion", "statics", "reduce", "identities", "params-check")

_COMMON_KEYS = {"command", "material", "grid", "backend", "seed", "out"}
_COMMAND_KEYS = {
    "simulate": {"steps", "dt", "amplitude"},
    "dispersion": {"direction", "k_min", "k_max", "k_samples"},
    "statics": {"problem", "tol", "amplitude"},
    "reduce": {"mapping", "a1", "a2", "a3", "mu", "d", "nu", "alpha3"},
    "identities": set(),
    "params-check": set(),
}


class ConfigError(Exception):
    pass


def _parse_flat(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = val
    return values


def load_config(path: Path) -> dict:
    cfg = _parse_flat(path.read_text())
    command = cfg.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"config must set command to one of {', '.join(COMMANDS)}")
    allowed = _COMMON_KEYS | _COMMAND_KEYS[command]
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    return cfg


def _say(quiet, *args):
    if not quiet:
        print(*args)


def _load_material(cfg, config_dir: Path):
    if "material" not in cfg:
        raise ConfigError("config needs a `material` key pointing at a parameter file")
    path = Path(cfg["material"])
    if not path.is_absolute():
        path = config_dir / path
    return load_material_params(path)


def _require_admissible(p, quiet) -> None:
    report = check_admissible(p)
    if not report.passed:
        for line in report.lines():
            print(line)
        raise InadmissibleParams(
            "; ".join(c.name for c in report.failures()) or "inadmissible parameters"
        )
    _say(quiet, f"parameters admissible ({p.variant.value})")


def cmd_params_check(cfg, ctx) -> int:
    p = _load_material(cfg, ctx["config_dir"])
    report = check_admissible(p)
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def cmd_identities(cfg, ctx) -> int:
    results = run_identity_suite(n=ctx["grid_n"], seed=ctx["seed"])
    summary = format_summary(results)
    out = ctx["out"] / "identities.txt"
    out.write_text(summary)
    _say(ctx["quiet"], summary.rstrip())
    _say(ctx["quiet"], f"wrote {out}")
    return 0 if all(r.passed for r in results) else 2


def cmd_simulate(cfg, ctx) -> int:
    p = _load_material(cfg, ctx["config_dir"])
    _require_admissible(p, ctx["quiet"])
    grid = Grid(ctx["grid_n"], ctx["backend"])
    rng = np.random.default_rng(ctx["seed"])
    amplitude = float(cfg.get("amplitude", "1.0"))
    steps = int(cfg.get("steps", "200"))
    s0 = random_state(grid, rng, amplitude)
    dt_max = estimate_stable_dt(p, grid)
    dt_key = cfg.get("dt", "auto")
    dt = 0.5 * dt_max if dt_key == "auto" else float(dt_key)
    _say(ctx["quiet"], f"dt = {dt:.6g} (dt_max = {dt_max:.6g}), {steps} steps, n = {grid.n}")
    final, trace = run(s0, p, dt=dt, n_steps=steps)
    trace.write_csv(ctx["out"] / "energy.csv")
    for name, field in (("u", final.u), ("udot", final.udot), ("P", final.P), ("Pdot", final.Pdot)):
        save_field(field, ctx["out"] / f"final_{name}.csv")
    _say(ctx["quiet"], f"relative energy drift {trace.drift():.3e}")
    _say(ctx["quiet"], f"wrote energy.csv and final state snapshots to {ctx['out']}")
    return 0


def cmd_dispersion(cfg, ctx) -> int:
    p = _load_material(cfg, ctx["config_dir"])
    _require_admissible(p, ctx["quiet"])
    direction = [float(tok) for tok in cfg.get("direction", "0 0 1").replace(",", " ").split()]
    k_min = float(cfg.get("k_min", "0"))
    k_max = float(cfg.get("k_max", "8"))
    samples = int(cfg.get("k_samples", "400"))
    k_samples = np.linspace(k_min, k_max, samples)
    if k_samples[0] == k_samples[-1]:
        raise ConfigError("k_min and k_max must differ")
    bs = branches(direction, k_samples, p)
    gaps = detect_band_gaps(bs)
    write_branches_csv(bs, ctx["out"] / "dispersion.csv")
    write_gap_report(gaps, ctx["out"] / "gaps.json")
    if gaps:
        for g in gaps:
            _say(ctx["quiet"], f"band gap: [{g.lo:.6g}, {g.hi:.6g}] at resolution {g.resolution}")
    else:
        _say(ctx["quiet"], f"no band gap resolved at resolution {samples}")
    _say(ctx["quiet"], f"wrote dispersion.csv and gaps.json to {ctx['out']}")
    return 0


def cmd_statics(cfg, ctx) -> int:
    p = _load_material(cfg, ctx["config_dir"])
    _require_admissible(p, ctx["quiet"])
    grid = Grid(ctx["grid_n"], ctx["backend"])
    rng = np.random.default_rng(ctx["seed"])
    tol = float(cfg.get("tol", "1e-8"))
    amplitude = float(cfg.get("amplitude", "1.0"))
    problem = cfg.get("problem", "relaxed")
    if problem == "relaxed":
        from micromorph import tensors

        f = random_band_limited(grid, "vector", rng, amplitude)
        f = VectorField(f.values - np.mean(f.values, axis=(0, 1, 2)), grid)
        M = random_band_limited(grid, "tensor", rng, amplitude)
        if p.mu_c == 0.0:
            # the skew mean of M drives a zero-energy mode; remove it
            M = TensorField(M.values - tensors.skew(np.mean(M.values, axis=(0, 1, 2))), grid)
        sol = solve_static_relaxed(StaticProblem(p, grid, f=f, M=M), tol=tol)
        sol.write_convergence_csv(ctx["out"] / "convergence.csv")
        save_field(sol.fields["u"], ctx["out"] / "u.csv")
        save_field(sol.fields["P"], ctx["out"] / "P.csv")
    elif problem == "lazar":
        raw = random_band_limited(grid, "tensor", rng, amplitude)
        rows = [project_divergence_free(VectorField(raw.values[..., i, :], grid)) for i in range(3)]
        sigma0 = TensorField(np.stack([r.values for r in rows], axis=-2), grid)
        sol = solve_lazar(StaticProblem(p, grid, sigma0=sigma0), tol=tol)
        sol.write_convergence_csv(ctx["out"] / "convergence.csv")
        save_field(sol.fields["beta_e"], ctx["out"] / "beta_e.csv")
    else:
        raise ConfigError(f"statics problem must be 'relaxed' or 'lazar', got {problem!r}")
    _say(ctx["quiet"],
         f"{problem} statics: residual {sol.residual:.3e} after {sol.iterations} CG iterations, "
         f"energy {sol.energy:.6e}")
    _say(ctx["quiet"], f"wrote convergence.csv and solution snapshots to {ctx['out']}")
    return 0


def _alpha_verdicts(alpha1, alpha2, alpha3=None):
    rows = [("alpha1 > 0", alpha1), ("alpha2 > 0", alpha2)]
    if alpha3 is not None:
        rows.append(("alpha3 > 0", alpha3))
    return [f"{'PASS' if v > 0 else 'FAIL'}  {name}  (value = {v:.12g})" for name, v in rows]


def cmd_reduce(cfg, ctx) -> int:
    mapping = cfg.get("mapping")
    lines = [f"mapping: {mapping}"]
    if mapping == "eringen-claus":
        a1, a2, a3 = (float(cfg[k]) for k in ("a1", "a2", "a3"))
        lines.append(f"input: a1 = {a1:.12g}, a2 = {a2:.12g}, a3 = {a3:.12g}")
        alpha1, alpha2, alpha3 = map_eringen_claus(a1, a2, a3)
    elif mapping == "popov-kroener":
        mu, d, nu = (float(cfg[k]) for k in ("mu", "d", "nu"))
        lines.append(f"input: mu = {mu:.12g}, d = {d:.12g}, nu = {nu:.12g}")
        alpha1, alpha2, alpha3 = map_popov_kroener(mu, d, nu)
        lines += [
            f"alpha1 = {alpha1:.12g}",
            f"alpha2 = {alpha2:.12g}",
            f"alpha3 = {alpha3:.12g}",
        ]
        lines += _alpha_verdicts(alpha1, alpha2, None)
        lines.append("note: the trace part of the curvature is absent in this model (alpha3 = 0)")
        _emit_reduce(lines, ctx)
        return 0
    elif mapping == "teisseyre":
        alpha3 = float(cfg["alpha3"])
        lines.append(f"input: alpha3 = {alpha3:.12g}")
        alpha1, alpha2 = teisseyre_einstein(alpha3)
        lines += [
            f"alpha1 = {alpha1:.12g}",
            f"alpha2 = {alpha2:.12g}",
            f"alpha3 = {alpha3:.12g}",
            "note: curvature energy indefinite by construction (Einstein choice)",
        ]
        _emit_reduce(lines, ctx)
        return 0
    elif mapping == "cowin-nunziato":
        p = _load_material(cfg, ctx["config_dir"])
        cn = map_cowin_nunziato(p)
        lines.append(
            "input: mu_e = {:.12g}, lambda_e = {:.12g}, mu_h = {:.12g}, "
            "lambda_h = {:.12g}, alpha2 = {:.12g}".format(
                p.mu_e, p.lambda_e, p.mu_h, p.lambda_h, p.alpha2
            )
        )
        lines += [
            f"mu_v = {cn.mu_v:.12g}",
            f"lambda_v = {cn.lambda_v:.12g}",
            f"alpha_v = {cn.alpha_v:.12g}",
            f"b_v = {cn.b_v:.12g}",
            f"xi_v = {cn.xi_v:.12g}",
        ]
        for name, value, ok in cn.positivity():
            lines.append(f"{'PASS' if ok else 'FAIL'}  {name}  (value = {value:.12g})")
        _emit_reduce(lines, ctx)
        return 0
    else:
        raise ConfigError(
            "reduce needs mapping = eringen-claus | popov-kroener | cowin-nunziato | teisseyre"
        )
    lines += [
        f"alpha1 = {alpha1:.12g}",
        f"alpha2 = {alpha2:.12g}",
        f"alpha3 = {alpha3:.12g}",
    ]
    lines += _alpha_verdicts(alpha1, alpha2, alpha3)
    _emit_reduce(lines, ctx)
    return 0


def _emit_reduce(lines, ctx) -> None:
    text = "\n".join(lines) + "\n"
    (ctx["out"] / "mapping.txt").write_text(text)
    _say(ctx["quiet"], text.rstrip())


_DISPATCH = {
    "simulate": cmd_simulate,
    "dispersion": cmd_dispersion,
    "statics": cmd_statics,
    "reduce": cmd_reduce,
    "identities": cmd_identities,
    "params-check": cmd_params_check,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="micromorph", description=__doc__)
    parser.add_argument("--config", required=True, help="flat key = value run configuration")
    parser.add_argument("--seed", type=int, default=None, help="seed for all randomized inputs")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--backend", choices=("spectral", "fd2"), default=None)
    parser.add_argument("--grid", type=int, default=None, help="grid points per axis")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        config_path = Path(args.config)
        cfg = load_config(config_path)
        ctx = {
            "config_dir": config_path.resolve().parent,
            "seed": args.seed if args.seed is not None else int(cfg.get("seed", "0")),
            "grid_n": args.grid if args.grid is not None else int(cfg.get("grid", "16")),
            "backend": args.backend or cfg.get("backend", "spectral"),
            "out": Path(args.out or cfg.get("out", "out")),
            "quiet": args.quiet,
        }
        ctx["out"].mkdir(parents=True, exist_ok=True)
        return _DISPATCH[cfg["command"]](cfg, ctx)
    except InadmissibleParams as exc:
        print(f"inadmissible parameters: {exc}", file=sys.stderr)
        return 1
    except (UnstableTimestep, NoConvergence, SingularProblem) as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except (ConfigError, OSError, ValueError, MicromorphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
