"""Command-line entry point: ``prony-leaves <command> [options]``.

Commands: ``solve``, ``leaf-sample``, ``classify2``, ``error-set``, ``scaling``.
Options come from flags, then an optional ``--config`` JSON file, then the
defaults shown by ``--dump-config``. Exit codes: 0 success, 1 bad input or
I/O failure, 2 a valid input with no regular solution (EMPTY, NON_HYPERBOLIC,
DEGENERATE).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import io
from .core import MomentVector, PronyError, RegularityParams, Signal, moment_array
from .inversion import (FULL, leaf_convergence, prony_solve, sample_error_set, scaling_sweep,
                        task_seed, worst_case_report)
from .leaves import (LeafSpec, SamplingConfig, classify_two_node_curve, leaf_projection_high_q,
                     leaf_section_filter, sample_leaf_low_q)
from .polynomial import GAP_TOL

log = logging.getLogger("prony_leaves")

COMMANDS = ("solve", "leaf-sample", "classify2", "error-set", "scaling")


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = "solve"
    input: str | None = None
    output: str | None = None
    seed: int = 0
    budget: int = 256
    format: str | None = None
    q: int | None = None
    d: int | None = None
    h: list[float] = field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05])
    eps_c: float = 1e-8
    eps_exp: float = 0.0
    kappa: float = 0.0
    box: float = 3.0
    grid: int = 61
    radius: float = 0.5
    tol: float = GAP_TOL
    section: float | None = None
    leaf_budget: int = 64
    cloud_size: int = 512
    samples_dir: str | None = None


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prony-leaves", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS)
    S = argparse.SUPPRESS
    p.add_argument("--config", default=None, help="JSON file with RunConfig fields")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    p.add_argument("--input", default=S)
    p.add_argument("--output", default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--budget", type=int, default=S, help="random error-set draws per h")
    p.add_argument("--format", choices=("json", "csv"), default=S)
    p.add_argument("--q", type=int, default=S)
    p.add_argument("--d", type=int, default=S)
    p.add_argument("--h", type=_float_list, default=S, help="comma separated cluster sizes")
    p.add_argument("--eps-c", dest="eps_c", type=float, default=S)
    p.add_argument("--eps-exp", dest="eps_exp", type=float, default=S)
    p.add_argument("--kappa", type=float, default=S)
    p.add_argument("--box", type=float, default=S, help="half-width of the sampling box")
    p.add_argument("--grid", type=int, default=S, help="grid points per box axis")
    p.add_argument("--radius", type=float, default=S, help="ball radius in model coordinates")
    p.add_argument("--tol", type=float, default=S, help="root gap tolerance")
    p.add_argument("--section", type=float, default=S, help="leaf section bound c")
    p.add_argument("--leaf-budget", dest="leaf_budget", type=int, default=S)
    p.add_argument("--cloud-size", dest="cloud_size", type=int, default=S)
    p.add_argument("--samples-dir", dest="samples_dir", default=S)
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, ValueError) as exc:
            raise InputError(f"config: cannot read {args.config}: {exc}") from None
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise InputError(f"config: unknown field(s) {sorted(unknown)}")
    for name in known:
        if hasattr(args, name) and getattr(args, name) is not None:
            values[name] = getattr(args, name)
    return RunConfig(**values)


def _summary_path(cfg: RunConfig) -> str | None:
    if cfg.output is None or cfg.output == "-":
        return None
    return str(Path(cfg.output).with_suffix(".summary.json"))


def _write_summary(cfg: RunConfig, summary: dict) -> None:
    path = _summary_path(cfg)
    if path is None:
        sys.stderr.write(io.dumps(summary) + "\n")
    else:
        io.write_json(summary, path)


def _load_input(cfg: RunConfig) -> dict:
    if cfg.input is None:
        raise InputError("input: --input PATH is required")
    try:
        obj = json.loads(Path(cfg.input).read_text())
    except OSError as exc:
        raise InputError(f"input: cannot read {cfg.input}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(f"input: {cfg.input} is not valid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise InputError("input: expected a JSON object")
    return obj


def _get_mu(obj: dict) -> list[float]:
    mu = obj.get("mu")
    if not isinstance(mu, list) or not mu:
        raise InputError("mu: expected a non-empty list of numbers")
    try:
        return [float(v) for v in mu]
    except (TypeError, ValueError):
        raise InputError("mu: entries must be numbers") from None


def _get_d(obj: dict, cfg: RunConfig) -> int:
    d = obj.get("d", cfg.d)
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise InputError("d: expected a positive integer")
    return d


def _get_signal(obj: dict, key: str | None = None) -> Signal:
    src = obj.get(key) if key else obj
    if not isinstance(src, dict):
        raise InputError(f"{key}: expected a signal object")
    for name in ("amplitudes", "nodes"):
        if not isinstance(src.get(name), list):
            raise InputError(f"{name}: expected a list of numbers")
    try:
        return io.signal_from_json(src)
    except PronyError as exc:
        raise InputError(f"{key or 'signal'}: {exc}") from None


def cmd_solve(cfg: RunConfig) -> int:
    obj = _load_input(cfg)
    mu = _get_mu(obj)
    d = _get_d(obj, cfg)
    if len(mu) != 2 * d:
        raise InputError(f"mu: expected 2d={2 * d} values, got {len(mu)}")
    res = prony_solve(mu, d, gap_tol=cfg.tol)
    io.write_json(res.to_json(), cfg.output)
    return 0 if res.ok else 2


def cmd_leaf_sample(cfg: RunConfig) -> int:
    obj = _load_input(cfg)
    mu = _get_mu(obj)
    d = _get_d(obj, cfg)
    q = len(mu) - 1
    if cfg.q is not None and cfg.q != q:
        raise InputError(f"q: --q {cfg.q} disagrees with len(mu)-1={q}")
    try:
        spec = LeafSpec(MomentVector(mu), d)
    except PronyError as exc:
        raise InputError(f"mu: {exc}") from None
    box = SamplingConfig(-cfg.box, cfg.box, cfg.grid)
    summary: dict = {"d": d, "q": q}
    if q <= d - 1:
        cloud = sample_leaf_low_q(spec, box, box, cfg.tol)
    else:
        proj = leaf_projection_high_q(spec, cfg.tol)
        cloud = proj.sample(box, audit_seed=cfg.seed)
        summary["solution_set"] = proj.solution_set.to_json()
    section = obj.get("c", cfg.section)
    if section is not None:
        ref = _get_signal(obj, "reference") if "reference" in obj else None
        if ref is None:
            raise InputError("reference: a section bound needs a reference signal")
        cloud = leaf_section_filter(cloud, ref, float(section))
    if d == 2 and q == 2:
        summary["classification"] = classify_two_node_curve(mu).to_json()
    summary.update({"status": cloud.status, "points": len(cloud),
                    "section_bound": cloud.section_bound, "stats": cloud.stats})
    if cfg.format == "json":
        io.write_json({"summary": summary, "params": cloud.params, "nodes": cloud.nodes,
                       "amplitudes": cloud.amplitudes, "residuals": cloud.residuals,
                       "near_boundary": cloud.near_boundary.tolist()}, cfg.output)
    else:
        io.write_cloud_csv(cloud, cfg.output)
        _write_summary(cfg, summary)
    return 2 if cloud.status == "EMPTY" else 0


def cmd_classify2(cfg: RunConfig) -> int:
    obj = _load_input(cfg)
    mu = _get_mu(obj)
    if len(mu) != 3:
        raise InputError(f"mu: expected 3 values (mu_0, mu_1, mu_2), got {len(mu)}")
    io.write_json(classify_two_node_curve(mu).to_json(), cfg.output)
    return 0


def cmd_error_set(cfg: RunConfig) -> int:
    obj = _load_input(cfg)
    F = _get_signal(obj, "signal" if "signal" in obj else None)
    eps = float(obj.get("eps", cfg.eps_c))
    if eps < 0:
        raise InputError("eps: must be non-negative")
    sample = sample_error_set(F, eps, cfg.budget, cfg.seed)
    report = worst_case_report(F, eps, cfg.budget, cfg.seed)
    summary = {"eps": eps, "draws": sample.draws, "accepted": len(sample.signals),
               "acceptance": sample.acceptance, "failures": sample.failures,
               "rho": report.errors.rho, "rho_A": report.errors.rho_A,
               "rho_X": report.errors.rho_X}
    if cfg.format == "json":
        io.write_json({"summary": summary,
                       "signals": [io.signal_to_json(s) for s in sample.signals]}, cfg.output)
    else:
        io.write_signals_csv(sample.signals, cfg.output)
        _write_summary(cfg, summary)
    return 0


def cmd_scaling(cfg: RunConfig) -> int:
    obj = _load_input(cfg)
    G = _get_signal(obj, "signal" if "signal" in obj else None)
    reg = None
    if any(k in obj for k in ("eta", "m", "M")):
        try:
            reg = RegularityParams(float(obj["eta"]), float(obj["m"]), float(obj["M"]))
        except KeyError as exc:
            raise InputError(f"{exc.args[0]}: regularity needs eta, m and M") from None
        except PronyError as exc:
            raise InputError(f"regularity: {exc}") from None
    q = FULL if cfg.q is None else cfg.q
    try:
        result = scaling_sweep(G, q, cfg.h, (cfg.eps_c, cfg.eps_exp), cfg.budget, cfg.seed,
                               kappa=cfg.kappa, regularity=reg, radius=cfg.radius,
                               leaf_budget=cfg.leaf_budget, cloud_size=cfg.cloud_size)
    except PronyError as exc:
        if reg is not None and "regular" in str(exc):
            raise InputError(f"signal: {exc}") from None
        raise
    summary = io.sweep_summary(result)
    for w in result.warnings:
        log.warning(w)
    if cfg.format == "json":
        io.write_json({"summary": summary,
                       "records": [dataclasses.asdict(r) for r in result.records]}, cfg.output)
    else:
        io.write_sweep_csv(result, cfg.output)
        _write_summary(cfg, summary)
    if cfg.samples_dir and q != FULL:
        _dump_samples(cfg, G, int(q), result)
    return 0


def _dump_samples(cfg: RunConfig, G: Signal, q: int, result) -> None:
    out = Path(cfg.samples_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, rec in enumerate(result.records):
        _, _, transported = leaf_convergence(G, q, rec.h, rec.eps, cfg.kappa, cfg.leaf_budget,
                                             task_seed(cfg.seed, i), cfg.radius, cfg.cloud_size)
        io.write_signals_csv(transported, out / f"error_set_h{rec.h:g}.csv")
    spec = LeafSpec(moment_array(G, q + 1), G.d)
    box = SamplingConfig(-cfg.box, cfg.box, cfg.grid)
    if q >= G.d:
        cloud = leaf_projection_high_q(spec, cfg.tol).sample(box)
    else:
        cloud = sample_leaf_low_q(spec, box, box, cfg.tol)
    io.write_cloud_csv(cloud, out / f"leaf_S{q}.csv")


HANDLERS = {"solve": cmd_solve, "leaf-sample": cmd_leaf_sample, "classify2": cmd_classify2,
            "error-set": cmd_error_set, "scaling": cmd_scaling}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command:
            cfg.command = args.command
        if args.dump_config:
            print(io.dumps(dataclasses.asdict(cfg)))
            return 0
        if not args.command and not args.config:
            parser.error("a command is required")
        return HANDLERS[cfg.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PronyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
