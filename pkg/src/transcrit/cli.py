"""Command-line front end: ``simulate``, ``chart``, ``sweep`` and ``verify``.

Settings resolve as built-in defaults < config file < ``TRANSCRIT_*``
environment variables < command-line flags.  The config file holds flat
``key = value`` lines; arrays are written ``[a, b, c]`` and ``#`` starts a
comment.  Exit codes: 0 success, 1 claim failure, 2 usage or validation
error.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import charts as C
from . import experiments as E
from .core_map import State, classify_branch, euler_step, iterate
from .errors import ChartDomainError, DivergenceError, ParameterError, TranscritError
from .io import loglog_svg, write_csv
from .params import Params

__all__ = ["main", "RunConfig", "load_config", "parse_config_text", "DEFAULTS"]

log = logging.getLogger("transcrit")

ENV_PREFIX = "TRANSCRIT_"

# Every key the tool understands, with its default.  Grid-valued keys hold
# tuples.
DEFAULTS: dict[str, Any] = {
    "lambda": 0.5,
    "eps": 0.025,
    "h": 0.01,
    "rho": 1.0,
    "delta": None,
    "omega": None,
    "seed": 0,
    "out": "out",
    "format": "csv",
    "threads": 1,
    "x0": -1.0,
    "y0": -1.0,
    "n": 1000,
    "chart": "K1",
    "point": (1.0, -1.0, 0.025, 0.01),
    "axis": "delta",
    "grid": (0.15, 0.2, 0.25, 0.3, 0.35, 0.4),
    "samples": 16,
    "lams": (-0.5, 0.5, 2.0),
    "deltas": (0.05, 0.1),
    "nus": (0.005, 0.01),
    "chart_samples": 100_000,
    "k2_samples": 1000,
    "transition_starts": 60,
    "containment_samples": 10_000,
    "composition_samples": 100,
    "exit_band": (0.25, 0.42),
}

_TUPLE_KEYS = {k for k, v in DEFAULTS.items() if isinstance(v, tuple)}
_INT_KEYS = {"seed", "threads", "n", "samples", "chart_samples", "k2_samples",
             "transition_starts", "containment_samples", "composition_samples"}
_STR_KEYS = {"out", "format", "chart", "axis"}


def _parse_value(key: str, text: str) -> Any:
    text = text.strip()
    if key not in DEFAULTS:
        raise ParameterError(f"unknown config key {key!r}")
    if key in _TUPLE_KEYS:
        body = text[1:-1] if text.startswith("[") and text.endswith("]") else text
        items = [t for t in (s.strip() for s in body.split(",")) if t]
        try:
            return tuple(float(t) for t in items)
        except ValueError:
            raise ParameterError(f"{key}: expected numbers, got {text!r}") from None
    if key in _STR_KEYS:
        return text
    if text.lower() in ("none", ""):
        return None
    try:
        return int(text) if key in _INT_KEYS else float(text)
    except ValueError:
        raise ParameterError(f"{key}: cannot parse {text!r}") from None


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines."""
    out: dict[str, Any] = {}
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {num}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = _parse_value(key, val)
    return out


def _env_overrides(environ) -> dict[str, Any]:
    out = {}
    for key in DEFAULTS:
        name = ENV_PREFIX + key.upper()
        if name in environ:
            out[key] = _parse_value(key, environ[name])
    return out


def load_config(path: str | None, flags: dict[str, Any],
                environ=os.environ) -> dict[str, Any]:
    """Merge defaults, file, environment and flags (later wins)."""
    cfg = dict(DEFAULTS)
    if path:
        cfg.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    cfg.update(_env_overrides(environ))
    cfg.update({k: v for k, v in flags.items() if v is not None})
    if cfg["format"] not in ("csv", "svg"):
        raise ParameterError(f"format must be csv or svg, got {cfg['format']!r}")
    if cfg["threads"] < 1:
        raise ParameterError("threads must be at least 1")
    return cfg


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one invocation."""

    params: Params
    seed: int
    output_dir: Path
    format: str
    threads: int = 1
    values: dict[str, Any] = field(default_factory=dict, repr=False)

    @classmethod
    def from_values(cls, v: dict[str, Any]) -> "RunConfig":
        p = Params(lam=v["lambda"], eps=v["eps"], h=v["h"], rho=v["rho"],
                   delta=v["delta"], omega=v["omega"])
        return cls(p, int(v["seed"]), Path(v["out"]), v["format"], int(v["threads"]), v)

    def require_theorem(self) -> None:
        """Validate the passage hypotheses other than ``lam != 1``."""
        bad = self.params.hypothesis_violations()
        if bad:
            raise ParameterError("; ".join(bad))


def _fmt_config(v: dict[str, Any]) -> str:
    lines = []
    for k in DEFAULTS:
        val = v[k]
        if isinstance(val, tuple):
            s = "[" + ", ".join(repr(float(x)) for x in val) + "]"
        elif val is None:
            s = "none"
        else:
            s = repr(val) if isinstance(val, float) else str(val)
        lines.append(f"{k} = {s}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ commands

def cmd_simulate(rc: RunConfig, x0: float, y0: float, n: int) -> Path:
    """Trajectory CSV ``step,x,y,eps,h,branch,flag``."""
    p = rc.params
    s0 = State(float(x0), float(y0), p.eps, p.h)
    rows = []
    try:
        tr = iterate(s0, p, n, cap=max(n, 1))
        states = tr.states
        flag_last = ""
    except DivergenceError as exc:
        good = iterate(s0, p, exc.step - 1, cap=max(exc.step - 1, 1)).states
        states = good + [State(*exc.state)]
        flag_last = "divergence"
    for k, s in enumerate(states):
        last = k == len(states) - 1
        branch = classify_branch(s).value if all(map(math.isfinite, s[:2])) else "none"
        rows.append((k, s.x, s.y, s.eps, s.h, branch, flag_last if last else ""))
    return write_csv(rc.output_dir / "simulate.csv",
                     ("step", "x", "y", "eps", "h", "branch", "flag"), rows)


_CHART_STEP = {"K1": (C.K1Point, C.step_k1), "K2": (C.K2Point, C.step_k2),
               "K3": (C.K3Point, C.step_k3)}


def cmd_chart(rc: RunConfig, chart_id: str, point: Sequence[float], n: int) -> Path:
    """Chart trajectory with the conjugacy residual of every step.

    ``conj_residual`` compares the blow-down of the chart step with the Euler
    step of the blow-down (relative, row 0 is 0).  ``eps_h`` is the
    original-space product ``eps h`` read off the chart point, constant along
    any orbit.
    """
    if chart_id not in _CHART_STEP:
        raise ParameterError(f"chart must be K1, K2 or K3, got {chart_id!r}")
    cls, step = _CHART_STEP[chart_id]
    if len(point) != 4:
        raise ParameterError("point needs four coordinates")
    z = cls(*map(float, point))
    boxes = C.domain_boxes(rc.params)
    box = {"K1": boxes.D1, "K2": boxes.D2, "K3": boxes.D3}[chart_id]
    for name, iv, val in zip(box.coords, box.bounds, z):
        if not iv.contains(val):
            raise ChartDomainError(name, val, f"{name} in [{iv.lo!r}, {iv.hi!r}] ({box.name})")
    rows = []
    for k in range(n + 1):
        if k:
            nz = step(z, rc.params)
            a = C.blow_down(nz)
            b = euler_step(C.blow_down(z), rc.params)
            scale = max(abs(b.x), abs(b.y))
            res = max(abs(a.x - b.x) / scale, abs(a.y - b.y) / scale,
                      abs(a.eps - b.eps) / abs(b.eps) if b.eps else abs(a.eps),
                      abs(a.h - b.h) / abs(b.h))
            z = nz
        else:
            res = 0.0
        s = C.blow_down(z)
        rows.append((k, *z, s.eps * s.h, res))
    header = ("step", *cls._fields, "eps_h", "conj_residual")
    return write_csv(rc.output_dir / f"chart_{chart_id}.csv", header, rows)


def cmd_sweep(rc: RunConfig, spec: E.SweepSpec) -> list[Path]:
    """Per-point CSV plus fitted summary (and SVG plots for ``--format svg``)."""
    pts, fits = E.run_sweep(spec, rc.threads)
    out = [write_csv(rc.output_dir / "sweep.csv", E.SweepPoint.HEADER,
                     [q.row() for q in pts])]
    out.append(write_csv(rc.output_dir / "sweep_fits.csv",
                         ("quantity", "slope", "intercept", "r_squared", "n_points"),
                         [(k, f.slope, f.intercept, f.r_squared, f.n_points)
                          for k, f in sorted(fits.items())]))
    if rc.format == "svg":
        for key, attr in (("exit_height", "exit_height"), ("width_ratio", "width_ratio")):
            if key in fits:
                good = [q for q in pts if not q.error and getattr(q, attr) > 0]
                out.append(loglog_svg(rc.output_dir / f"sweep_{key}.svg",
                                      [q.value for q in good],
                                      [getattr(q, attr) for q in good],
                                      slope=fits[key].slope, intercept=fits[key].intercept,
                                      title=f"{key} vs {spec.axis}", xlabel=spec.axis,
                                      ylabel=key))
    return out


def suite_config(rc: RunConfig, lambda_given: bool) -> E.SuiteConfig:
    v = rc.values
    lams = (rc.params.lam,) if lambda_given else tuple(v["lams"])
    return E.SuiteConfig(
        lams=lams, deltas=tuple(v["deltas"]), nus=tuple(v["nus"]), rho=rc.params.rho,
        seed=rc.seed, chart_samples=v["chart_samples"], k2_samples=v["k2_samples"],
        transition_starts=v["transition_starts"],
        containment_samples=v["containment_samples"],
        composition_samples=v["composition_samples"],
        exit_band=tuple(v["exit_band"]), threads=rc.threads)


def cmd_verify(rc: RunConfig, cfg: E.SuiteConfig) -> tuple[list[E.ClaimRow], list[Path]]:
    rows = E.run_claim_suite(cfg)
    paths = [rc.output_dir / "report.csv", rc.output_dir / "report.txt"]
    paths[0].parent.mkdir(parents=True, exist_ok=True)
    paths[0].write_text(E.report_csv(rows), encoding="utf-8")
    paths[1].write_text(E.report_table(rows), encoding="utf-8")
    return rows, paths


# --------------------------------------------------------------- parser

def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.strip("[]").split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="key = value config file")
    g.add_argument("--lambda", dest="lambda", type=float, help="normal-form constant")
    g.add_argument("--eps", type=float, help="time-scale separation")
    g.add_argument("--h", type=float, help="step size")
    g.add_argument("--rho", type=float, help="section abscissa")
    g.add_argument("--delta", type=float, help="chart eps ceiling (default 4 eps/rho^2)")
    g.add_argument("--out", help="output directory")
    g.add_argument("--format", choices=("csv", "svg"), help="artifact format")
    g.add_argument("--threads", type=int, help="worker threads")
    g.add_argument("--seed", type=int, help="sampling seed")
    g.add_argument("--print-config", action="store_true",
                   help="print the resolved configuration and exit")
    g.add_argument("-v", "--verbose", action="count", default=0)

    ap = argparse.ArgumentParser(
        prog="transcrit",
        description="Euler transcritical passage: simulation, chart maps, sweeps, checks.")
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common], help="iterate the Euler map")
    s.add_argument("--x0", type=float)
    s.add_argument("--y0", type=float)
    s.add_argument("--n", type=int)
    c = sub.add_parser("chart", parents=[common], help="iterate a chart map")
    c.add_argument("--chart", choices=("K1", "K2", "K3"))
    c.add_argument("--point", type=_floats, help="four chart coordinates, comma-separated")
    c.add_argument("--n", type=int)
    w = sub.add_parser("sweep", parents=[common], help="one-parameter sweep with fits")
    w.add_argument("--axis", choices=("eps", "h", "delta", "nu", "lam"))
    w.add_argument("--grid", type=_floats, help="comma-separated grid values")
    w.add_argument("--samples", type=int, help="samples per grid point")
    sub.add_parser("verify", parents=[common], help="run the claim suite")
    return ap


_FLAG_KEYS = ("lambda", "eps", "h", "rho", "delta", "out", "format", "threads", "seed",
              "x0", "y0", "n", "chart", "point", "axis", "grid", "samples")


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {k: getattr(args, k, None) for k in _FLAG_KEYS}
    try:
        values = load_config(args.config, flags)
        if args.print_config:
            sys.stdout.write(_fmt_config(values))
            return 0
        rc = RunConfig.from_values(values)
        if args.command == "simulate":
            path = cmd_simulate(rc, values["x0"], values["y0"], int(values["n"]))
            print(path)
            return 0
        if args.command == "chart":
            path = cmd_chart(rc, values["chart"], values["point"], int(values["n"]))
            print(path)
            return 0
        if args.command == "sweep":
            spec = E.SweepSpec(values["axis"], tuple(values["grid"]), rc.params,
                               int(values["samples"]))
            for path in cmd_sweep(rc, spec):
                print(path)
            return 0
        lambda_given = flags["lambda"] is not None or "TRANSCRIT_LAMBDA" in os.environ
        rc.require_theorem()
        cfg = suite_config(rc, lambda_given)
        cfg.validate()
        rows, paths = cmd_verify(rc, cfg)
        sys.stdout.write(E.report_table(rows))
        return 0 if all(r.passed for r in rows) else 1
    except (ParameterError, ChartDomainError, OSError) as exc:
        print(f"transcrit: error: {exc}", file=sys.stderr)
        return 2
    except TranscritError as exc:
        print(f"transcrit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
