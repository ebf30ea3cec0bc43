"""Batch command-line front end.

Exit codes: 0 YesOnRegion (or success), 1 No, 2 Inconclusive, 3 error.
Reports are JSON documents tagged with ``"schema": "neutral-obsctrl/1"``.
"""

from __future__ import annotations

import argparse
import io as _stdio
import sys as _sys
from dataclasses import dataclass, field

import numpy as np

from . import criteria, duality, spectral
from .errors import NeutralSystemError
from .io import SystemFormatError, dumps_report, load_system
from .model import ComplexRegion, M2State, OutputKind
from .simulate import output_trace, simulate, with_output, write_trajectory_csv

__all__ = ["RunConfig", "run", "main", "build_parser"]

COMMANDS = (
    "simulate",
    "spectrum",
    "check-controllability",
    "check-observability",
    "check-approx-observability",
    "gramian",
    "duality-check",
)

EXIT_ERROR = 3


@dataclass
class RunConfig:
    command: str
    system_path: str
    region: tuple | None = None
    T: float | None = None
    N: tuple = ()
    tol: float | None = None
    output_kind: str | None = None
    trials: int = 10
    seed: int = 0
    out_path: str | None = None
    init: tuple | None = None
    extra: dict = field(default_factory=dict)


def _floats(text, count=None):
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"expected {count} numbers, got {len(vals)}")
    return vals


def _region_arg(text):
    return _floats(text, 4)


def _ints(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="neutral-obsctrl", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--system", required=True, help="system description (JSON)")
    parser.add_argument("--region", type=_region_arg, help="re0,re1,im0,im1")
    parser.add_argument("--T", type=float, help="horizon")
    parser.add_argument("--N", type=_ints, help="steps per unit delay (comma list for gramian)")
    parser.add_argument("--tol", type=float, help="rank tolerance (spectrum: residual tolerance)")
    parser.add_argument("--output", choices=[k.value for k in OutputKind], help="output kind override")
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="write the report (simulate: the CSV trajectory) to this path")
    parser.add_argument("--init", type=_floats, help="simulate: constant initial segment value(s)")
    return parser


def _config(ns):
    return RunConfig(
        command=ns.command, system_path=ns.system, region=ns.region, T=ns.T, N=ns.N or (),
        tol=ns.tol, output_kind=ns.output, trials=ns.trials, seed=ns.seed, out_path=ns.out, init=ns.init,
    )


def _region(cfg):
    if cfg.region is None:
        return criteria.DEFAULT_REGION
    return ComplexRegion(*cfg.region)


def _require(cfg, *names):
    missing = [n for n in names if not getattr(cfg, n)]
    if missing:
        raise ValueError(f"{cfg.command} needs --{' --'.join(missing)}")


def _single_N(cfg, default=None):
    if not cfg.N:
        if default is None:
            raise ValueError(f"{cfg.command} needs --N")
        return default
    if len(cfg.N) != 1:
        raise ValueError(f"{cfg.command} takes a single --N")
    return cfg.N[0]


def _cmd_simulate(sys, cfg):
    _require(cfg, "T")
    N = _single_N(cfg, 64)
    n = sys.n
    value = np.zeros(n) if cfg.init is None else np.broadcast_to(np.asarray(cfg.init, dtype=float), (n,))
    init = M2State.from_segment(sys.A_minus1, np.tile(value, (N + 1, 1)))
    traj = simulate(sys, init, cfg.T, N)
    traj = with_output(traj, output_trace(sys, traj, cfg.output_kind))
    summary = {
        "command": cfg.command, "T": traj.t_end, "N": N, "nodes": int(traj.z.shape[0]),
        "output_kind": OutputKind(cfg.output_kind or sys.output_kind).value,
        "z_final": traj.z[-1].tolist(),
    }
    if cfg.out_path:
        write_trajectory_csv(traj, cfg.out_path)
        summary["csv"] = cfg.out_path
        return 0, dumps_report(summary)
    buf = _stdio.StringIO()
    write_trajectory_csv(traj, buf)
    return 0, buf.getvalue()


def _cmd_spectrum(sys, cfg):
    region = _region(cfg)
    tol = cfg.tol if cfg.tol is not None else 1e-10
    roots = spectral.eigenvalues_in_region(sys, region, tol=tol)
    report = {
        "command": cfg.command,
        "region": region.as_dict(),
        "tolerance": tol,
        "roots": [{"re": r.lam.real, "im": r.lam.imag, "multiplicity": r.multiplicity, "residual": r.residual}
                  for r in roots],
        "winding_total": sum(r.multiplicity for r in roots),
        "chain_real_parts": spectral.chain_real_parts(sys),
    }
    return 0, dumps_report(report)


def _verdict(v, cfg):
    report = {"command": cfg.command}
    report.update(v.as_dict())
    return v.exit_code, dumps_report(report)


def _tol(cfg):
    return None if cfg.tol is None else criteria.Tolerances(rank=cfg.tol)


def _cmd_controllability(sys, cfg):
    return _verdict(criteria.check_exact_controllability(sys, _region(cfg), _tol(cfg)), cfg)


def _cmd_observability(sys, cfg):
    return _verdict(criteria.check_exact_observability(sys, _region(cfg), _tol(cfg), cfg.output_kind), cfg)


def _cmd_approx(sys, cfg):
    return _verdict(criteria.check_approx_observability(sys, _region(cfg), _tol(cfg), cfg.output_kind), cfg)


def _cmd_gramian(sys, cfg):
    _require(cfg, "T")
    Ns = cfg.N or (32, 64, 128)
    rows = [duality.observability_gramian(sys, cfg.T, N, cfg.output_kind).as_dict() for N in Ns]
    report = {"command": cfg.command, "output_kind": OutputKind(cfg.output_kind or sys.output_kind).value,
              "estimates": rows}
    return 0, dumps_report(report)


def _cmd_duality(sys, cfg):
    T = cfg.T if cfg.T is not None else 2.0
    N = _single_N(cfg, 512)
    rep = duality.verify_duality(sys, T, cfg.trials, N, cfg.seed, cfg.output_kind)
    report = {"command": cfg.command, "seed": cfg.seed}
    report.update(rep.as_dict())
    return 0, dumps_report(report)


_DISPATCH = {
    "simulate": _cmd_simulate,
    "spectrum": _cmd_spectrum,
    "check-controllability": _cmd_controllability,
    "check-observability": _cmd_observability,
    "check-approx-observability": _cmd_approx,
    "gramian": _cmd_gramian,
    "duality-check": _cmd_duality,
}


def run(cfg):
    """Execute one command; returns ``(exit_code, text)``.  Failures become exit 3 with an error record."""
    try:
        if cfg.command not in _DISPATCH:
            raise ValueError(f"unknown command {cfg.command!r}")
        for N in cfg.N:
            if N < 8:
                raise ValueError("N must be at least 8")
        if cfg.T is not None and cfg.T <= 0:
            raise ValueError("T must be positive")
        sys = load_system(cfg.system_path)
        return _DISPATCH[cfg.command](sys, cfg)
    except (NeutralSystemError, SystemFormatError, ValueError, OSError) as exc:
        record = {"command": cfg.command, "error": {"type": type(exc).__name__, "message": str(exc)}}
        return EXIT_ERROR, dumps_report(record)


def _glue_values(argv):
    # let "--region -1,1,-2,2" through: argparse would read the value as a flag
    out = []
    it = iter(argv)
    for a in it:
        if a in ("--region", "--init", "--N"):
            nxt = next(it, None)
            if nxt is not None:
                out.append(f"{a}={nxt}")
                continue
        out.append(a)
    return out


def main(argv=None):
    parser = build_parser()
    argv = _glue_values(_sys.argv[1:] if argv is None else list(argv))
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else 0
    cfg = _config(ns)
    code, text = run(cfg)
    if cfg.out_path and cfg.command != "simulate" and code != EXIT_ERROR:
        with open(cfg.out_path, "w") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
