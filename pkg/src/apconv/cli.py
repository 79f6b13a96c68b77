"""Command-line entry point: ``apconv classify | convolve | verify``.

Exit codes: 0 complete/pass, 1 verification failed, 2 input or
configuration error, 3 hypothesis violated (inadmissible kernel).
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from . import __version__
from .apanalysis import ClassifyConfig, classify
from .convops import (AdmissibilityError, ConvolutionConfig, TailBoundError, admissibility,
                      finite_convolution, infinite_convolution, required_tail_cut)
from .funcspace import (HALF, WHOLE, CSVFormatError, GridError, atomic_write_text, half_line,
                        make_trig_polynomial, make_vanishing, read_csv, sample, to_csv_text,
                        whole_line)
from .harness import (TheoremReport, solve_dfp, solve_relaxation, verify_bd_invariance,
                      verify_doss_invariance, verify_perturbation)
from .specfun import KernelSpec

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_HYPOTHESIS = 3

THEOREMS = ("doss", "bd", "perturbation", "relaxation", "dfp")


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def _floats(text: str) -> tuple:
    parts = [x.strip() for x in text.split(",") if x.strip()]
    return tuple(float(x) for x in parts)


def _complexes(text: str) -> tuple:
    parts = [x.strip().replace(" ", "") for x in text.split(",") if x.strip()]
    return tuple(complex(x.replace("i", "j")) for x in parts)


@dataclass
class RunConfig:
    """Flat run parameters; every key may appear in a ``key = value`` file."""

    p: float = 2.0
    epsilon: float = 0.1
    epsilons: tuple = (0.05, 0.1, 0.2)
    lambdas: tuple = (0.0, 1.0, 3.0)
    kernel: str = "envelope"
    M: float = 1.0
    beta: float = 0.6
    gamma_decay: float = 2.0
    gamma_frac: float = 0.5
    lam: float = 1.0
    rate: float = 1.0
    dt: float = 0.02
    T_max: float = 7000.0
    tau_max: float = 1000.0
    dtau: Optional[float] = None
    levels: int = 12
    l_schedule: tuple = (10.0, 20.0, 40.0, 80.0)
    tol_tail: float = 1e-4
    rtol: float = 1e-3
    bd_tol: float = 0.05
    density_ratio: float = 0.25
    stability: float = 0.2
    freqs: tuple = (1.0, math.sqrt(2.0))
    coeffs: tuple = (1 + 0j, 1 + 0j)
    q_pert: str = "reciprocal-decay"
    x0: float = 1.0
    f_const: float = 0.0
    residual_tol: float = 1e-2
    decay_tol: float = 0.1
    t_out: Optional[float] = None
    v_singular_cut: float = 1.0
    v_tail_cut: Optional[float] = None
    mode: str = "infinite"
    out: str = "."


_PARSERS = {
    "epsilons": _floats, "lambdas": _floats, "l_schedule": _floats, "freqs": _floats,
    "coeffs": _complexes, "kernel": str, "q_pert": str, "mode": str, "out": str, "levels": int,
}
_OPTIONAL = {"dtau", "t_out", "v_tail_cut"}
FIELD_NAMES = tuple(f.name for f in fields(RunConfig))


def _parse_value(key: str, text: str):
    if key in _OPTIONAL and text.lower() in ("", "none"):
        return None
    parser = _PARSERS.get(key, float)
    value = parser(text)
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError("value must be finite")
    return value


def parse_config_text(text: str, base: Optional[RunConfig] = None) -> tuple:
    """Parse ``key = value`` lines; returns ``(RunConfig, {key: line})``."""
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in FIELD_NAMES:
            raise ConfigError(f"unknown key {key!r}", line=lineno, key=key)
        try:
            setattr(cfg, key, _parse_value(key, value))
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r} ({exc})", line=lineno, key=key) from None
        lines[key] = lineno
    return cfg, lines


def load_config(path: Optional[str]) -> tuple:
    if path is None:
        return RunConfig(), {}
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config_text(text)


def validate(cfg: RunConfig, lines: Optional[dict] = None) -> None:
    """Check every field against the preconditions of the module that consumes it."""
    lines = lines or {}

    def need(cond: bool, key: str, msg: str):
        if not cond:
            raise ConfigError(msg, line=lines.get(key), key=key)

    need(cfg.p >= 1, "p", "p must be >= 1")
    need(cfg.epsilon > 0, "epsilon", "epsilon must be positive")
    need(len(cfg.epsilons) > 0 and all(e > 0 for e in cfg.epsilons), "epsilons",
         "epsilons must be positive")
    need(cfg.kernel in ("envelope", "exponential", "resolvent"), "kernel",
         "kernel must be envelope, exponential or resolvent")
    need(cfg.M > 0, "M", "M must be positive")
    need(0 < cfg.beta <= 1, "beta", "beta must lie in (0, 1]")
    need(cfg.gamma_decay > 1, "gamma_decay", "gamma_decay must exceed 1")
    need(0 < cfg.gamma_frac <= 1, "gamma_frac", "gamma_frac must lie in (0, 1]")
    need(cfg.lam >= 0, "lam", "lam must be non-negative")
    need(cfg.rate > 0, "rate", "rate must be positive")
    need(cfg.dt > 0, "dt", "dt must be positive")
    need(cfg.T_max > 0, "T_max", "T_max must be positive")
    need(cfg.tau_max > 0, "tau_max", "tau_max must be positive")
    need(cfg.dtau is None or cfg.dtau > 0, "dtau", "dtau must be positive")
    if cfg.dtau is not None:
        r = cfg.dtau / cfg.dt
        need(abs(r - round(r)) < 1e-9 * max(1, r) and round(r) >= 1, "dtau",
             "dtau must be a positive integer multiple of dt")
    need(cfg.levels >= 2, "levels", "levels must be >= 2")
    ls = cfg.l_schedule
    need(len(ls) > 0 and all(b > a for a, b in zip(ls, ls[1:])) and ls[0] > 0, "l_schedule",
         "l_schedule must be increasing and positive")
    need(cfg.tol_tail > 0, "tol_tail", "tol_tail must be positive")
    need(cfg.rtol > 0, "rtol", "rtol must be positive")
    need(cfg.bd_tol > 0, "bd_tol", "bd_tol must be positive")
    need(0 < cfg.density_ratio <= 1, "density_ratio", "density_ratio must lie in (0, 1]")
    need(cfg.stability > 0, "stability", "stability must be positive")
    need(len(cfg.freqs) == len(cfg.coeffs), "coeffs", "freqs and coeffs must have the same length")
    need(cfg.q_pert in ("reciprocal-decay", "shrinking-spikes", "zero"), "q_pert",
         "q_pert must be reciprocal-decay, shrinking-spikes or zero")
    need(cfg.residual_tol > 0, "residual_tol", "residual_tol must be positive")
    need(cfg.decay_tol > 0, "decay_tol", "decay_tol must be positive")
    need(cfg.t_out is None or cfg.t_out > 0, "t_out", "t_out must be positive")
    need(cfg.v_singular_cut > 0, "v_singular_cut", "v_singular_cut must be positive")
    need(cfg.v_tail_cut is None or cfg.v_tail_cut > 0, "v_tail_cut", "v_tail_cut must be positive")
    need(cfg.mode in ("infinite", "finite"), "mode", "mode must be infinite or finite")


def kernel_from(cfg: RunConfig) -> KernelSpec:
    if cfg.kernel == "envelope":
        return KernelSpec.envelope(cfg.beta, cfg.gamma_decay, cfg.M)
    if cfg.kernel == "exponential":
        return KernelSpec.exponential(cfg.rate, cfg.M, cfg.gamma_decay)
    return KernelSpec.resolvent(cfg.gamma_frac, cfg.lam)


# --------------------------------------------------------------------------
# Output helpers
# --------------------------------------------------------------------------


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_meta(path: str, argv, extra: Optional[dict] = None) -> None:
    meta = {"argv": list(argv), "version": __version__, "python": platform.python_version(),
            "numpy": np.__version__,
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
    if extra:
        meta.update(extra)
    atomic_write_text(path + ".meta.json", _dump(meta))


def _err(msg: str) -> None:
    print(f"apconv: {msg}", file=sys.stderr)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_classify(args, cfg: RunConfig) -> int:
    f = read_csv(args.input)
    tau_max = min(cfg.tau_max, f.t_max / 4) if "tau_max" in args.set_keys else f.t_max / 4
    ccfg = ClassifyConfig(epsilon=cfg.epsilon, lambdas=cfg.lambdas, tau_max=tau_max,
                          dtau=cfg.dtau, l_schedule=cfg.l_schedule, bd_tol=cfg.bd_tol,
                          density_ratio=cfg.density_ratio, levels=cfg.levels, rtol=cfg.rtol)
    result = classify(f, cfg.p, ccfg)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "classify.json")
    atomic_write_text(path, _dump(result.to_dict()))
    _write_meta(path, sys.argv, {"input": os.path.abspath(args.input)})
    print(f"{result.label} -> {path}")
    return EXIT_OK


def cmd_convolve(args, cfg: RunConfig) -> int:
    spec = kernel_from(cfg)
    adm = admissibility(cfg.p, spec)
    if not adm:
        _err(f"hypothesis violated: {adm.reason}")
        return EXIT_HYPOTHESIS
    f = read_csv(args.input)
    ccfg = ConvolutionConfig(p=cfg.p, tol_tail=cfg.tol_tail, v_singular_cut=cfg.v_singular_cut,
                             v_tail_cut=cfg.v_tail_cut)
    if cfg.mode == "infinite":
        if f.domain != WHOLE:
            raise ConfigError("infinite mode needs a whole-line input (symmetric grid)", key="mode")
        out, info = infinite_convolution(spec, f, cfg.t_out, ccfg, full_output=True)
        print(f"tail bound {info['tail_bound']:.6g} (V = {info['v_tail_cut']:g}, "
              f"||g||_S = {info['stepanov_norm']:.6g})", file=sys.stderr)
    else:
        if f.domain != HALF:
            raise ConfigError("finite mode needs a half-line input starting at t = 0", key="mode")
        out = finite_convolution(spec, f, cfg.t_out, ccfg)
        info = {"tail_bound": 0.0}
    path = args.output or os.path.join(cfg.out, "convolution.csv")
    atomic_write_text(path, to_csv_text(out))
    _write_meta(path, sys.argv, {"info": {k: v for k, v in info.items()
                                          if isinstance(v, (int, float, str, bool))}})
    return EXIT_OK


def _quasi_periodic(cfg: RunConfig, t_max: float):
    return make_trig_polynomial(cfg.freqs, cfg.coeffs, whole_line(t_max, cfg.dt))


def run_verify(name: str, cfg: RunConfig) -> TheoremReport:
    spec = kernel_from(cfg)
    if name == "doss":
        g = _quasi_periodic(cfg, cfg.T_max)
        return verify_doss_invariance(g, spec, cfg.p, cfg.epsilons, cfg.tau_max, cfg.dtau,
                                      cfg.levels, cfg.tol_tail, stability=cfg.stability,
                                      density_ratio=cfg.density_ratio, rtol=cfg.rtol)
    if name == "bd":
        g = _quasi_periodic(cfg, cfg.T_max)
        return verify_bd_invariance(
            g, spec, cfg.p, cfg.lambdas, cfg.l_schedule, bd_tol=cfg.bd_tol, tol_tail=cfg.tol_tail,
            rtol=cfg.rtol,
            doss_kwargs={"epsilon_list": cfg.epsilons, "tau_max": cfg.tau_max, "dtau": cfg.dtau,
                         "levels": cfg.levels, "stability": cfg.stability,
                         "density_ratio": cfg.density_ratio, "rtol": cfg.rtol})
    if name == "perturbation":
        grid = half_line(cfg.T_max, cfg.dt)
        if cfg.q_pert == "zero":
            q = sample(lambda t: np.zeros_like(t), grid)
        else:
            q = make_vanishing(cfg.q_pert, grid, cfg.p)
        bound_norm = float(np.sum(np.abs(cfg.coeffs)))
        rep = admissibility(cfg.p, spec)
        V = required_tail_cut(spec, bound_norm, cfg.tol_tail)[0] if rep else 0
        g = _quasi_periodic(cfg, cfg.T_max + V + 2 * cfg.dt)
        return verify_perturbation(g, q, spec, cfg.p, cfg.epsilon, cfg.tau_max, cfg.bd_tol,
                                   cfg.tol_tail, rtol=cfg.rtol)
    if name == "relaxation":
        res = solve_relaxation(cfg.lam, cfg.gamma_frac, (cfg.freqs, cfg.coeffs), cfg.dt,
                               cfg.t_out or 20.0)
        return res.to_report(cfg.residual_tol)
    if name == "dfp":
        f = sample(lambda t: np.full_like(t, cfg.f_const), half_line(cfg.T_max, cfg.dt))
        return solve_dfp(cfg.lam, cfg.gamma_frac, cfg.x0, f, cfg.decay_tol).to_report()
    raise ConfigError(f"unknown theorem {name!r}")


def cmd_verify(args, cfg: RunConfig) -> int:
    report = run_verify(args.theorem, cfg)
    paths = report.write(cfg.out, args.theorem)
    _write_meta(paths[-1], sys.argv, {"config": os.path.abspath(args.config) if args.config else None})
    status = "pass" if report.passed else "fail"
    failed = report.failed_hypotheses
    if failed:
        _err(f"hypothesis failed: {'; '.join(failed)}")
    print(f"{args.theorem}: {status} -> {paths[-1]}")
    return EXIT_OK if report.passed else EXIT_FAILED


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


_FLAG_KEYS = ("p", "epsilon", "kernel", "M", "beta", "gamma_decay", "gamma_frac", "lam", "rate",
              "dt", "T_max", "tau_max", "dtau", "tol_tail", "t_out", "v_tail_cut", "mode", "out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apconv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key = value configuration file")
        for key in _FLAG_KEYS:
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                            help=f"override config key '{key}'")

    sp = sub.add_parser("classify", help="run the almost-periodicity diagnostics on a CSV")
    sp.add_argument("input")
    common(sp)
    sp = sub.add_parser("convolve", help="convolve a CSV with a kernel")
    sp.add_argument("input")
    sp.add_argument("-o", "--output", help="output CSV (default: <out>/convolution.csv)")
    common(sp)
    sp = sub.add_parser("verify", help="run one invariance verification")
    sp.add_argument("theorem", choices=THEOREMS)
    common(sp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, lines = load_config(args.config)
        set_keys = set(lines)
        for key in _FLAG_KEYS:
            raw = getattr(args, key, None)
            if raw is None:
                continue
            try:
                setattr(cfg, key, _parse_value(key, raw))
            except ValueError as exc:
                raise ConfigError(f"bad value {raw!r} ({exc})", key=key) from None
            set_keys.add(key)
        args.set_keys = set_keys
        validate(cfg, lines)
        handler = {"classify": cmd_classify, "convolve": cmd_convolve, "verify": cmd_verify}
        return handler[args.command](args, cfg)
    except AdmissibilityError as exc:
        _err(f"hypothesis violated: {exc}")
        return EXIT_HYPOTHESIS
    except (ConfigError, CSVFormatError, GridError, TailBoundError, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
