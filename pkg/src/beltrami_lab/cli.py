"""``beltrami-lab`` command-line tool.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .grid import BfldError, Grid, read_bfld, write_bfld
from .solver import CoefficientError, ConvergenceError, solve, validate_coefficients

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

TRANSFORMS = ("beurling", "conjugate-beurling", "cauchy", "fractional", "dbar", "d", "mollify")
NORM_KINDS = ("tl", "besov", "difference")
ORACLES = ("radial-stretch", "beurling-disk", "cauchy-disk")


class NumericalFailure(RuntimeError):
    pass


class InputError(ValueError):
    pass


# Common flags, attached to every subcommand.  Kept as a table so the help
# text can be checked against it.
COMMON_FLAGS = (
    ("--config", dict(metavar="PATH", help="INI config file (see data/config_schema.txt)")),
    ("--out", dict(metavar="DIR", help="output directory (created if missing)")),
    ("--json-errors", dict(action="store_true", help="report errors as JSON on stderr")),
    ("--strict", dict(action="store_true",
                      help="treat warnings (truncated norms, smoothness budget) as failures")),
    ("--threads", dict(type=int, metavar="N",
                       help="FFT/probe threads, 0 = auto (default: $BELTRAMI_LAB_THREADS)")),
)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    for flag, kw in COMMON_FLAGS:
        g.add_argument(flag, **kw)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="beltrami-lab",
        description="Spectral Beltrami solver, function-space norms and regularity probes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    sub.add_parser("solve", parents=[common], help="solve for the principal solution",
                   description="Solve (I - mu B - nu conj B) h = mu + nu; writes h.bfld, Bh.bfld, "
                               "f_disp.bfld, iterations.csv and summary.json.")

    t = sub.add_parser("transform", parents=[common], help="apply a Fourier multiplier to a field",
                       description="Apply a multiplier to a BFLD1 field; writes <kind>.bfld.")
    t.add_argument("--field", required=True, metavar="FILE", help="input BFLD1 field")
    t.add_argument("--kind", required=True, choices=TRANSFORMS, help="operator to apply")
    t.add_argument("--s", type=float, default=0.0, help="order for fractional (default 0)")
    t.add_argument("--n-moll", type=int, default=8, help="mollifier scale for mollify (default 8)")

    n = sub.add_parser("norm", parents=[common], help="quasi-norm of a field (JSON on stdout)",
                       description="Estimate a Triebel-Lizorkin, Besov or difference norm.")
    n.add_argument("--field", required=True, metavar="FILE", help="input BFLD1 field")
    n.add_argument("--s", type=float, required=True, help="smoothness")
    n.add_argument("--p", type=float, required=True, help="integrability")
    n.add_argument("--q", type=float, default=2.0, help="fine index (default 2; 'inf' for Besov)")
    n.add_argument("--kind", choices=NORM_KINDS, default="tl", help="norm family (default tl)")
    n.add_argument("--M", type=int, default=1, help="difference order for --kind difference")

    sub.add_parser("probe", parents=[common], help="run a regularity threshold probe",
                   description="Refinement probe from [coefficients] and [probe]; writes "
                               "probe.csv and probe.json.")

    sub.add_parser("calibrate", parents=[common], help="run the calibration sweep",
                   description="Freeze norm-equivalence constants; writes calibration.json "
                               "(into --out, or the package data directory).")

    o = sub.add_parser("oracle", parents=[common], help="evaluate closed-form reference values",
                       description="radial-stretch: BFLD1 dumps of mu, h, f - z on [grid]; "
                                   "beurling-disk / cauchy-disk: JSON quadrature values at "
                                   "the standard probe points.")
    o.add_argument("--kind", required=True, choices=ORACLES, help="oracle to evaluate")
    o.add_argument("--k", type=float, default=0.3, help="radial-stretch parameter (default 0.3)")
    o.add_argument("--count", type=int, default=20, help="number of probe points (default 20)")
    return parser


# -- commands ------------------------------------------------------------------


def _out_dir(args, default=".") -> Path:
    out = Path(args.out or default)
    if out.exists() and not out.is_dir():
        raise InputError(f"--out {out} exists and is not a directory")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _need_config(args, require):
    if not args.config:
        raise ConfigError(f"{args.command} requires --config")
    return load_config(args.config, require=require)


def _read_field(path):
    if not Path(path).is_file():
        raise InputError(f"field file not found: {path}")
    return read_bfld(path)


def cmd_solve(args) -> int:
    cfg = _need_config(args, ("grid", "coefficients"))
    if not os.access(Path(args.out or ".").resolve().parent, os.W_OK):
        raise InputError(f"cannot write to {args.out}")
    mu, nu = cfg.family.build(cfg.grid)
    coeffs = validate_coefficients(mu, nu, rescale=cfg.family.kind in ("mollified", "custom"))
    try:
        cfg.solver.check(coeffs.kappa)
    except ValueError as exc:
        raise ConfigError(str(exc), "solver", "max_iterations") from None
    sol = solve(coeffs, cfg.solver)
    out = _out_dir(args)
    paths = sol.dump(out)
    summary = {
        "kappa": coeffs.kappa,
        "support_radius": coeffs.support_radius,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "iteration_bound": cfg.solver.iteration_bound(coeffs.kappa),
        "h_l2": sol.h.norm(2),
        "outputs": {k: str(v) for k, v in paths.items()},
    }
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_transform(args) -> int:
    from . import spectral

    f = _read_field(args.field)
    kind = args.kind
    if kind == "mollify":
        g = spectral.mollify(f, args.n_moll)
    elif kind == "fractional":
        g = spectral.fractional_derivative(f, args.s)
    else:
        g = spectral.apply_multiplier(f, spectral.MultiplierSpec(kind))
    out = _out_dir(args)
    path = out / f"{kind}.bfld"
    write_bfld(path, g)
    print(json.dumps({"kind": kind, "output": str(path), "l2": g.norm(2)}, sort_keys=True))
    return EXIT_OK


def cmd_norm(args) -> int:
    from .spaces import SobolevIndex, besov_norm, difference_norm, tl_norm

    f = _read_field(args.field)
    index = SobolevIndex(args.s, args.p, args.q)
    if args.kind == "tl":
        rep = tl_norm(f, index)
    elif args.kind == "besov":
        rep = besov_norm(f, index)
    else:
        rep = difference_norm(f, index, M=args.M)
    print(rep.to_json())
    if args.out:
        (_out_dir(args) / "norm.json").write_text(rep.to_json() + "\n")
    if rep.truncation_flag and args.strict:
        raise NumericalFailure("norm truncated: top two bands carry more than 5% of the total")
    return EXIT_OK


def cmd_probe(args) -> int:
    from .experiments import run_probe

    cfg = _need_config(args, ("coefficients", "probe"))
    workers = args.threads if args.threads else 1
    res = run_probe(cfg.probe, cfg.solver, strict=args.strict, workers=workers)
    out = _out_dir(args)
    (out / "probe.csv").write_text(res.to_csv())
    (out / "probe.json").write_text(res.to_json() + "\n")
    print(res.to_json())
    if args.strict:
        bad = [q for q in cfg.probe.q_grid
               if any(res.reports[(q, n)].truncation_flag for n in cfg.probe.refinement_levels)]
        if bad:
            raise NumericalFailure(f"norm truncation at q = {bad}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .experiments import CALIBRATION_PATH, calibration_sweep

    path = (_out_dir(args) / "calibration.json") if args.out else CALIBRATION_PATH
    calibration_sweep(path=path)
    print(json.dumps({"output": str(path)}))
    return EXIT_OK


def cmd_oracle(args) -> int:
    from . import oracles

    if args.kind == "radial-stretch":
        cfg = load_config(args.config, require=("grid",)) if args.config else None
        grid = cfg.grid if cfg else Grid(256, 4.0)
        mu, disp, h = oracles.RadialStretch(args.k).sampled(grid)
        out = _out_dir(args)
        for name, fld in (("mu", mu), ("h", h), ("f_disp", disp)):
            write_bfld(out / f"{name}.bfld", fld)
        print(json.dumps({"k": args.k, "alpha": oracles.RadialStretch(args.k).alpha,
                          "output": str(out)}, sort_keys=True))
        return EXIT_OK
    fn = oracles.beurling_disk_quadrature if args.kind == "beurling-disk" else oracles.cauchy_disk_quadrature
    pts = oracles.probe_points(args.count)
    rows = [{"z": [p.real, p.imag], "value": [v.real, v.imag]} for p, v in ((p, fn(p)) for p in pts)]
    text = json.dumps({"kind": args.kind, "points": rows}, sort_keys=True)
    if args.out:
        (_out_dir(args) / f"{args.kind}.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "transform": cmd_transform,
    "norm": cmd_norm,
    "probe": cmd_probe,
    "calibrate": cmd_calibrate,
    "oracle": cmd_oracle,
}


def _threads(args) -> None:
    from .spectral import set_workers

    n = args.threads
    if n is None:
        raw = os.environ.get("BELTRAMI_LAB_THREADS")
        if raw:
            try:
                n = int(raw)
            except ValueError:
                raise ConfigError(f"BELTRAMI_LAB_THREADS must be an integer, got {raw!r}") from None
    if n is not None and n < 0:
        raise ConfigError(f"--threads must be >= 0, got {n}")
    args.threads = n
    set_workers(n or None)


def _report(exc, code, args):
    msg = str(exc)
    if getattr(args, "json_errors", False):
        payload = {"error": type(exc).__name__, "message": msg, "exit_code": code}
        for attr in ("section", "key", "line"):
            if getattr(exc, attr, None) is not None:
                payload[attr] = getattr(exc, attr)
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    else:
        print(f"beltrami-lab: error: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _threads(args)
        return COMMANDS[args.command](args)
    except (ConfigError, CoefficientError, InputError, BfldError) as exc:
        return _report(exc, EXIT_CONFIG, args)
    except ConvergenceError as exc:
        return _report(exc, EXIT_NUMERIC, args)
    except NumericalFailure as exc:
        return _report(exc, EXIT_NUMERIC, args)
    except ValueError as exc:
        return _report(exc, EXIT_CONFIG, args)
    except RuntimeError as exc:  # ProbeError and friends
        return _report(exc, EXIT_NUMERIC, args)


if __name__ == "__main__":
    sys.exit(main())
