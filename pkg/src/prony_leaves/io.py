"""JSON and CSV readers/writers for signals, leaf clouds and sweep tables.

JSON numbers are written with 17 significant digits, CSV numbers with the
shortest round-trip ``repr``; both parse back to the identical float.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import MomentVector, PronyError, Signal
from .inversion import ErrorSweepRecord, InversionResult, Status, SweepResult
from .leaves import LeafPointCloud
from .linalg import AffineSolutionSet
from .polynomial import MonicRealPolynomial


def _fmt_json_number(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """``json.dumps`` with 17-significant-digit floats and sorted keys."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_json_number(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(str(k)) + ": " + dumps(obj[k], indent, _level + 1)
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(obj, path) -> None:
    text = dumps(obj) + "\n"
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def signal_to_json(F: Signal) -> dict:
    return {"amplitudes": F.amplitudes.tolist(), "nodes": F.nodes.tolist()}


def signal_from_json(obj: dict) -> Signal:
    try:
        return Signal(obj["amplitudes"], obj["nodes"])
    except KeyError as exc:
        raise PronyError(f"signal is missing field {exc.args[0]!r}") from None


def moments_to_json(mu: MomentVector) -> dict:
    return {"values": mu.values.tolist()}


def moments_from_json(obj: dict) -> MomentVector:
    return MomentVector(obj["values"])


def polynomial_to_json(Q: MonicRealPolynomial) -> dict:
    return {"sigma": Q.sigma.tolist()}


def polynomial_from_json(obj: dict) -> MonicRealPolynomial:
    return MonicRealPolynomial(obj["sigma"])


def solution_set_from_json(obj: dict) -> AffineSolutionSet:
    basis = np.array(obj.get("basis") or [], dtype=float)
    if obj.get("particular") is None:
        d = basis.shape[1] if basis.ndim == 2 and basis.size else 0
        return AffineSolutionSet(d, None, basis.reshape(0, d), -1)
    p = np.array(obj["particular"], dtype=float)
    basis = basis.reshape(-1, p.size)
    return AffineSolutionSet(p.size, p, basis, p.size - basis.shape[0])


def inversion_from_json(obj: dict) -> InversionResult:
    sig = obj.get("signal")
    sigma = obj.get("sigma")
    return InversionResult(
        Status(obj["status"]),
        None if sig is None else signal_from_json(sig),
        math.nan if obj.get("residual") is None else obj["residual"],
        math.nan if obj.get("min_gap") is None else obj["min_gap"],
        None if sigma is None else np.array(sigma, dtype=float))


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_rows(header, rows, path) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)
    return text


def cloud_header(cloud: LeafPointCloud) -> list[str]:
    k = cloud.params.shape[1] if cloud.params.ndim == 2 else 0
    d = cloud.d
    return ([f"t_{i + 1}" for i in range(k)] + [f"x_{i + 1}" for i in range(d)]
            + [f"a_{i + 1}" for i in range(d)] + ["residual", "near_boundary"])


def write_cloud_csv(cloud: LeafPointCloud, path) -> str:
    rows = []
    for i in range(len(cloud)):
        rows.append([*cloud.params[i], *cloud.nodes[i], *cloud.amplitudes[i],
                     cloud.residuals[i], bool(cloud.near_boundary[i])])
    return _write_rows(cloud_header(cloud), rows, path)


def read_cloud_csv(path, mu, d: int) -> LeafPointCloud:
    """Parse a cloud CSV back into a ``LeafPointCloud`` for moments ``mu``."""
    mu = mu if isinstance(mu, MomentVector) else MomentVector(mu)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in r] for r in reader]
    k = sum(1 for h in header if h.startswith("t_"))
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return LeafPointCloud(
        mu.q, d, mu, data[:, :k], data[:, k:k + d], data[:, k + d:k + 2 * d],
        data[:, k + 2 * d], data[:, k + 2 * d + 1].astype(bool),
        status="OK" if len(data) else "EMPTY")


def sweep_header(d: int) -> list[str]:
    return (["h", "eps", "rho", "rho_A", "rho_X"]
            + [f"rho_S{q}" for q in range(2 * d)] + ["samples", "failures"])


def write_sweep_csv(result: SweepResult, path) -> str:
    d = result.d
    rows = []
    for r in result.records:
        rows.append([r.h, r.eps, r.rho, r.rho_A, r.rho_X]
                    + [r.rho_Sq.get(q, math.nan) for q in range(2 * d)]
                    + [r.sample_count, r.failures])
    return _write_rows(sweep_header(d), rows, path)


def read_sweep_csv(path) -> list[ErrorSweepRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            rho_S = {int(k[5:]): float(v) for k, v in row.items()
                     if k.startswith("rho_S") and not math.isnan(float(v))}
            out.append(ErrorSweepRecord(
                float(row["h"]), float(row["eps"]), float(row["rho"]), float(row["rho_A"]),
                float(row["rho_X"]), rho_S, int(row["samples"]), int(row["failures"]),
                math.nan, math.nan))
    return out


def sweep_summary(result: SweepResult) -> dict:
    return {
        "d": result.d,
        "slopes": {k: {"slope": v.slope, "stderr": v.stderr, "intercept": v.intercept}
                   for k, v in result.slopes.items()},
        "warnings": list(result.warnings),
        "records": [{"h": r.h, "eps": r.eps, "eps_outer": r.eps_outer, "eps_inner": r.eps_inner,
                     "leaf_distance": r.leaf_distance, "section_deviation": r.section_deviation,
                     "solver_failures": r.solver_failures}
                    for r in result.records],
    }


def write_signals_csv(signals, path) -> str:
    signals = list(signals)
    d = signals[0].d if signals else 0
    header = [f"a_{i + 1}" for i in range(d)] + [f"x_{i + 1}" for i in range(d)]
    return _write_rows(header, [[*F.amplitudes, *F.nodes] for F in signals], path)


def read_signals_csv(path) -> list[Signal]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = len(header) // 2
        return [Signal([float(v) for v in r[:d]], [float(v) for v in r[d:]]) for r in reader]
