"""Command-line front end.

Every command resolves its flags into a configuration dictionary, checks
it, runs, and writes CSV or JSON with that configuration embedded, so
``midcave replay FILE`` reproduces the file byte for byte.

Exit codes: 0 consistent with the expected result, 1 internal error,
2 configuration error, 3 inconclusive, 4 inconsistent (a check that
should hold failed beyond tolerance).
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Any, Callable

import numpy as np

from . import __version__
from .chain import (fdd_gaussian_profile, fdd_stable, fdd_stable_profile, phi_values)
from .claims import (EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_INCONSISTENT, EXIT_INTERNAL,
                     EXIT_OK, REGISTRY, run_claim, sweep_conjecture)
from .domain import Box, Interval, Profile, TimeGrid, uniform_grid
from .eigen import (eigen_from_survival, extrapolated_ground_state, ground_state,
                    survival_bm_exact, survival_profile, survival_sequence)
from .errors import ConfigError, MidcaveError
from .io import read_config, render_csv, render_json, write_text
from .kernels import check_alpha, stable_density
from .montecarlo import MCConfig, mc_fdd
from .shape import (check_concave, check_logconcave, check_midconcave,
                    check_monotone_center)

COMMANDS = ("density", "phi", "fdd", "survival", "eigen", "shape", "reproduce", "sweep", "mc")


def _floats(text: str | None) -> list[float] | None:
    if text is None:
        return None
    items = [s for s in text.replace(" ", "").split(",") if s]
    try:
        return [float(s) for s in items]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}")


def _ints(text: str | None) -> list[int] | None:
    vals = _floats(text)
    if vals is None:
        return None
    if any(v != int(v) for v in vals):
        raise ConfigError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, default=None, help="stability index in (0, 2]")
    common.add_argument("--half-width", default=None,
                        help="half-width a, or comma-separated half-widths of a box")
    common.add_argument("--times", default=None, help="comma-separated observation times")
    common.add_argument("--grid", type=int, default=None, help="grid points per axis")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--tolerance", type=float, default=None,
                        help="relative shape-check tolerance (times max|f|)")

    p = argparse.ArgumentParser(prog="midcave", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("density", parents=[common], help="stable density on a grid")
    s.add_argument("--t", type=float, default=None)

    s = sub.add_parser("phi", parents=[common], help="iterated Gaussian convolution and derivative")
    s.add_argument("--durations", default=None, help="comma-separated kernel variances")

    s = sub.add_parser("fdd", parents=[common], help="finite-dimensional distribution probability")
    s.add_argument("--x", default=None, help="start point; omit for a profile (d = 1)")
    s.add_argument("--method", choices=("quadrature", "montecarlo"), default=None)
    s.add_argument("--samples", type=int, default=None)

    s = sub.add_parser("survival", parents=[common], help="discrete-observation survival")
    s.add_argument("--t", type=float, default=None)
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--x", default=None)

    s = sub.add_parser("eigen", parents=[common], help="principal eigenvalue and ground state")
    s.add_argument("--dt", type=float, default=None, help="omit to extrapolate over a dt schedule")
    s.add_argument("--method", choices=("power", "survival"), default=None)

    s = sub.add_parser("shape", parents=[common], help="shape checks on a computed profile")
    s.add_argument("--source", choices=("phi", "fdd", "eigen", "survival"), default=None)
    s.add_argument("--durations", default=None)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--t", type=float, default=None)
    s.add_argument("--steps", type=int, default=None)

    s = sub.add_parser("reproduce", parents=[common], help="run a claim's check suite")
    s.add_argument("--claim", required=True, choices=sorted(REGISTRY))
    s.add_argument("--samples", type=int, default=None)
    s.add_argument("--timing", action="store_true", help="include wall time in the record")

    s = sub.add_parser("sweep", parents=[common], help="full-concavity sweep over equal spacings")
    s.add_argument("--alpha-list", default=None)
    s.add_argument("--t-list", default=None)
    s.add_argument("--n-list", default=None)

    s = sub.add_parser("mc", parents=[common], help="Monte Carlo fdd estimate")
    s.add_argument("--x", default=None)
    s.add_argument("--samples", type=int, default=None)
    s.add_argument("--batches", type=int, default=None)

    s = sub.add_parser("replay", help="rerun the configuration embedded in a result file")
    s.add_argument("file")
    s.add_argument("--out", default=None)
    return p


# -- configuration ---------------------------------------------------------------

def _pick(value, default):
    return default if value is None else value


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Fill defaults and validate; the result is what gets embedded."""
    cmd = args.command
    cfg: dict[str, Any] = {"command": cmd}
    g = getattr
    hw = _floats(g(args, "half_width", None)) or [1.0]
    if any(not v > 0 for v in hw):
        raise ConfigError("half-widths must be positive")
    fmt = g(args, "format", None)
    tol = g(args, "tolerance", None)
    if tol is not None and not (math.isfinite(tol) and tol > 0):
        raise ConfigError("--tolerance must be a positive number")
    grid = g(args, "grid", None)
    if grid is not None and grid < 9:
        raise ConfigError("--grid needs at least 9 points")
    if cmd == "density":
        cfg.update(alpha=check_alpha(_pick(args.alpha, 1.0)), t=_pick(args.t, 1.0),
                   half_width=hw[0], grid=_pick(args.grid, 101), format=fmt or "csv")
        if not cfg["t"] > 0:
            raise ConfigError("t must be positive")
    elif cmd == "phi":
        durs = _floats(args.durations) or [1.0]
        cfg.update(durations=durs, half_width=hw[0], grid=_pick(args.grid, 513),
                   format=fmt or "csv")
    elif cmd == "fdd":
        times = _floats(args.times) or [1.0]
        TimeGrid(tuple(times))
        cfg.update(alpha=check_alpha(_pick(args.alpha, 2.0)), times=times, half_widths=hw,
                   x=_floats(args.x), method=_pick(args.method, "quadrature"),
                   grid=_pick(args.grid, 513), seed=_pick(args.seed, 0),
                   samples=_pick(args.samples, 1_000_000), format=fmt or "csv")
        if cfg["x"] is None and len(hw) > 1:
            raise ConfigError("profiles are one-dimensional; give --x for a box")
    elif cmd == "survival":
        cfg.update(alpha=check_alpha(_pick(args.alpha, 2.0)), t=_pick(args.t, 1.0),
                   steps=_pick(args.steps, 16), half_widths=hw, x=_floats(args.x),
                   grid=_pick(args.grid, 513), format=fmt or "csv")
        if not cfg["t"] > 0 or cfg["steps"] < 1:
            raise ConfigError("need t > 0 and steps >= 1")
    elif cmd == "eigen":
        cfg.update(alpha=check_alpha(_pick(args.alpha, 2.0)), half_widths=hw, dt=args.dt,
                   method=_pick(args.method, "power"), grid=args.grid, format=fmt or "json")
    elif cmd == "shape":
        cfg.update(source=_pick(args.source, "phi"), alpha=check_alpha(_pick(args.alpha, 2.0)),
                   durations=_floats(args.durations) or [0.5, 0.5],
                   times=_floats(args.times) or [1.0], half_width=hw[0],
                   dt=_pick(args.dt, 1 / 256), t=_pick(args.t, 1.0), steps=_pick(args.steps, 16),
                   grid=_pick(args.grid, 513), tolerance=args.tolerance, format=fmt or "csv")
    elif cmd == "reproduce":
        cfg.update(claim=args.claim, seed=_pick(args.seed, 0), grid=args.grid,
                   tolerance=args.tolerance, samples=args.samples,
                   alpha=None if args.alpha is None else check_alpha(args.alpha),
                   timing=bool(args.timing), format="json")
    elif cmd == "sweep":
        alphas = _floats(args.alpha_list) if args.alpha_list is not None else [2.0]
        ts = _floats(args.t_list) if args.t_list is not None else [1.0]
        ns = _ints(args.n_list) if args.n_list is not None else list(range(1, 9))
        if not alphas or not ts or not ns:
            raise ConfigError("sweep lists must be non-empty")
        for a in alphas:
            check_alpha(a)
        if any(n < 1 for n in ns) or any(not t > 0 for t in ts):
            raise ConfigError("sweep needs n >= 1 and t > 0")
        cfg.update(alpha_list=alphas, t_list=ts, n_list=ns, half_width=hw[0],
                   grid=_pick(args.grid, 513), tolerance=args.tolerance, format=fmt or "csv")
    elif cmd == "mc":
        times = _floats(args.times) or [1.0]
        TimeGrid(tuple(times))
        x = _floats(args.x) or [0.0] * len(hw)
        cfg.update(alpha=check_alpha(_pick(args.alpha, 1.0)), times=times, half_widths=hw, x=x,
                   seed=_pick(args.seed, 0), samples=_pick(args.samples, 100_000),
                   batches=_pick(args.batches, 10), format=fmt or "json")
        MCConfig(cfg["seed"], cfg["samples"], cfg["batches"])
    return cfg


# -- commands --------------------------------------------------------------------------

def _profile_rows(prof: Profile, *extra):
    cols = [prof.grid, prof.values, *extra]
    return list(zip(*[np.asarray(c).tolist() for c in cols]))


def _emit(cfg, header, rows, results=None, json_results=None) -> str:
    if cfg["format"] == "json":
        payload = dict(results or {})
        payload["columns"] = list(header)
        payload["rows"] = [list(r) for r in rows]
        if json_results is not None:
            payload = json_results
        return render_json(cfg, payload)
    return render_csv(header, rows, cfg, results)


def cmd_density(cfg):
    x = uniform_grid(cfg["half_width"], cfg["grid"])
    vals = np.atleast_1d(stable_density(cfg["alpha"], cfg["t"], x))
    return _emit(cfg, ["x", "p_t_alpha"], list(zip(x.tolist(), vals.tolist()))), EXIT_OK


def cmd_phi(cfg):
    x = uniform_grid(cfg["half_width"], cfg["grid"])
    val, der = phi_values(cfg["durations"], cfg["half_width"], x)
    return _emit(cfg, ["x", "phi", "dphi"], list(zip(x.tolist(), val.tolist(), der.tolist()))), EXIT_OK


def cmd_fdd(cfg):
    box = Box(tuple(cfg["half_widths"]))
    times = TimeGrid(tuple(cfg["times"]))
    if cfg["x"] is not None:
        res = fdd_stable(cfg["x"], cfg["alpha"], times, box, method=cfg["method"],
                         grid=cfg["grid"], samples=cfg["samples"], seed=cfg["seed"])
        if cfg["method"] == "montecarlo":
            rows = [[res.mean, res.stderr, res.samples]]
            return _emit(cfg, ["probability", "stderr", "samples"], rows), EXIT_OK
        return _emit(cfg, ["probability"], [[res]]), EXIT_OK
    dom = Interval(cfg["half_widths"][0])
    if cfg["alpha"] == 2.0:
        prof = fdd_gaussian_profile(times, dom, cfg["grid"])
    else:
        prof = fdd_stable_profile(cfg["alpha"], times, dom, cfg["grid"])
    return _emit(cfg, ["x", "probability"], _profile_rows(prof)), EXIT_OK


def cmd_survival(cfg):
    alpha, hw = cfg["alpha"], cfg["half_widths"]
    dt = cfg["t"] / cfg["steps"]
    if cfg["x"] is not None:
        s = survival_sequence(alpha, Box(tuple(hw)), dt, [cfg["steps"]], cfg["x"], cfg["grid"])[0]
        row = [s]
        header = ["survival"]
        if alpha == 2.0 and len(hw) == 1:
            row.append(survival_bm_exact(hw[0], cfg["t"], cfg["x"][0]))
            header.append("continuous_exact")
        return _emit(cfg, header, [row]), EXIT_OK
    prof = survival_profile(alpha, hw[0], cfg["t"], cfg["steps"], cfg["grid"])
    if alpha == 2.0:
        inner = [survival_bm_exact(hw[0], cfg["t"], v) if abs(v) < hw[0] else 0.0
                 for v in prof.grid]
        return _emit(cfg, ["x", "survival", "continuous_exact"], _profile_rows(prof, inner)), EXIT_OK
    return _emit(cfg, ["x", "survival"], _profile_rows(prof)), EXIT_OK


def cmd_eigen(cfg):
    box = Box(tuple(cfg["half_widths"]))
    if cfg["method"] == "survival":
        est = eigen_from_survival(cfg["alpha"], box, grid=cfg["grid"] or 513)
        res = {"lambda1": est.lambda1, "t1": est.t1, "t2": est.t2, "dts": est.dts,
               "lambdas": est.lambdas, "window_gap": est.window_gap, **est.diagnostics}
        return render_json(cfg, res), EXIT_OK
    if cfg["dt"] is None:
        r = extrapolated_ground_state(cfg["alpha"], box, grid=cfg["grid"])
    else:
        r = ground_state(cfg["alpha"], box, cfg["dt"], cfg["grid"])
    summary = r.summary()
    prof = r.groundstate
    if isinstance(prof, Profile):
        header, rows = ["x", "groundstate"], _profile_rows(prof)
    else:
        header = ["x1", "x2", "groundstate"]
        rows = [[xi, yj, prof.values[i, j]] for i, xi in enumerate(prof.x.tolist())
                for j, yj in enumerate(prof.y.tolist())]
    return _emit(cfg, header, rows, summary), EXIT_OK


def _shape_profile(cfg) -> Profile:
    src, a = cfg["source"], cfg["half_width"]
    if src == "phi":
        x = uniform_grid(a, cfg["grid"])
        val, _ = phi_values(cfg["durations"], a, x)
        return Profile(x, val, {"op": "phi_chain"})
    if src == "fdd":
        times = TimeGrid(tuple(cfg["times"]))
        if cfg["alpha"] == 2.0:
            return fdd_gaussian_profile(times, Interval(a), cfg["grid"])
        return fdd_stable_profile(cfg["alpha"], times, Interval(a), cfg["grid"])
    if src == "survival":
        return survival_profile(cfg["alpha"], a, cfg["t"], cfg["steps"], cfg["grid"])
    return ground_state(cfg["alpha"], Box((a,)), cfg["dt"], cfg["grid"]).groundstate


def cmd_shape(cfg):
    prof = _shape_profile(cfg)
    tol = None if cfg["tolerance"] is None else cfg["tolerance"] * float(np.max(np.abs(prof.values)))
    reports = [check_monotone_center(prof, tol), check_concave(prof, None, tol),
               check_midconcave(prof, tol)]
    if np.all(prof.values[1:-1] > 0):
        reports.append(check_logconcave(prof, None, None if tol is None else cfg["tolerance"]))
    header = ["property", "region_lo", "region_hi", "verdict", "status", "worst_violation",
              "worst_location", "tolerance"]
    rows = [[r.property, r.region[0], r.region[1], r.verdict, r.status, r.worst_violation,
             r.worst_location, r.tolerance] for r in reports]
    return _emit(cfg, header, rows, json_results=[r.to_dict() for r in reports]
                 if cfg["format"] == "json" else None), EXIT_OK


def cmd_reproduce(cfg):
    params = {"seed": cfg["seed"], "grid": cfg["grid"], "rel_tol": cfg["tolerance"],
              "samples": cfg["samples"]}
    if cfg["alpha"] is not None:
        params["alpha"] = cfg["alpha"]
    rec = run_claim(cfg["claim"], **params)
    print(f"{rec.claim}: verdict={rec.verdict} expected={rec.expected} "
          f"worst_violation={rec.worst_violation:.3e} runtime={rec.runtime:.2f}s", file=sys.stderr)
    code = rec.exit_code()
    if code == EXIT_INCONSISTENT:
        print(f"INCONSISTENT: {rec.claim} certificate={rec.certificate}", file=sys.stderr)
    elif code == EXIT_INCONCLUSIVE:
        print(f"INCONCLUSIVE: {rec.claim} certificate={rec.certificate}", file=sys.stderr)
    return render_json(cfg, rec.to_dict(timing=cfg["timing"])), code


def cmd_sweep(cfg):
    rows = sweep_conjecture(cfg["alpha_list"], cfg["t_list"], cfg["n_list"], cfg["half_width"],
                            cfg["grid"], cfg["tolerance"])
    header = ["alpha", "t", "n", "verdict", "worst_violation", "location"]
    return _emit(cfg, header, [[r[h] for h in header] for r in rows]), EXIT_OK


def cmd_mc(cfg):
    est = mc_fdd(cfg["x"], cfg["alpha"], TimeGrid(tuple(cfg["times"])),
                 Box(tuple(cfg["half_widths"])),
                 MCConfig(cfg["seed"], cfg["samples"], cfg["batches"]))
    if cfg["format"] == "json":
        return render_json(cfg, est.to_dict()), EXIT_OK
    return render_csv(["mean", "stderr", "samples", "seed"],
                      [[est.mean, est.stderr, est.samples, est.seed]], cfg), EXIT_OK


HANDLERS: dict[str, Callable[[dict], tuple[str, int]]] = {
    "density": cmd_density, "phi": cmd_phi, "fdd": cmd_fdd, "survival": cmd_survival,
    "eigen": cmd_eigen, "shape": cmd_shape, "reproduce": cmd_reproduce, "sweep": cmd_sweep,
    "mc": cmd_mc,
}


def run_config(cfg: dict, out: str | None) -> int:
    text, code = HANDLERS[cfg["command"]](cfg)
    write_text(text, out)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports its own usage errors
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if args.command == "replay":
            cfg = read_config(args.file)
            if cfg.get("command") not in HANDLERS:
                raise ConfigError(f"{args.file} does not hold a replayable configuration")
        else:
            cfg = resolve(args)
        return run_config(cfg, args.out)
    except ValueError as exc:  # ConfigError and DomainError among them
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MidcaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
