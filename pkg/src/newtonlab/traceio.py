"""JSON-lines trace files.

Line 1 is a header object, then one object per IterationRecord, then a
trailer object. Every line carries a ``type`` field. Floats are written in
shortest round-trip form; NaN and infinities become the strings "NaN",
"Infinity" and "-Infinity" so the file stays strict JSON. Only the header's
``created`` field varies between identical runs.
"""

from __future__ import annotations

import dataclasses
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import MalformedTraceError
from .solvers import IterationRecord, SolveResult, SolverConfig, Status

FORMAT = "newtonlab-trace/1"
_NONFINITE = {"NaN": math.nan, "Infinity": math.inf, "-Infinity": -math.inf}
_RECORD_FIELDS = [f.name for f in dataclasses.fields(IterationRecord)]


def _num(v):
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return v


def _parse_num(v) -> float:
    if isinstance(v, str):
        if v not in _NONFINITE:
            raise MalformedTraceError(f"bad number {v!r}")
        return _NONFINITE[v]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedTraceError(f"expected a number, got {v!r}")
    return float(v)


def _vec(x) -> list:
    return [_num(v) for v in np.atleast_1d(x)]


def _dump(obj: dict) -> str:
    return json.dumps(obj, allow_nan=False, separators=(",", ":"))


def record_to_dict(r: IterationRecord) -> dict:
    return {
        "type": "record",
        "index": r.index,
        "x": _vec(r.x),
        "f": _num(r.f),
        "grad_norm": _num(r.grad_norm),
        "decrement": _num(r.decrement),
        "direction_norm": _num(r.direction_norm),
        "step_length": _num(r.step_length),
        "full_step_accepted": r.full_step_accepted,
        "f_decrease": _num(r.f_decrease),
    }


def config_to_dict(cfg: SolverConfig) -> dict:
    return {k: (None if v is None else _num(v) if isinstance(v, float) else v)
            for k, v in dataclasses.asdict(cfg).items()}


def trace_lines(result: SolveResult, problem: str, created: str | None = None) -> list[str]:
    if created is None:
        created = datetime.now(timezone.utc).isoformat(timespec="seconds")
    header = {
        "type": "header",
        "format": FORMAT,
        "problem": problem,
        "solver": result.method,
        "decrement_kind": result.decrement_kind,
        "config": config_to_dict(result.config),
        "created": created,
    }
    trailer = {
        "type": "trailer",
        "status": result.status.value,
        "final_x": _vec(result.final_x),
        "iterations": result.iterations,
        "detail": result.status_detail,
    }
    return [_dump(header)] + [_dump(record_to_dict(r)) for r in result.trace] + [_dump(trailer)]


def write_trace(result: SolveResult, problem: str, out: str | Path | IO[str], created: str | None = None) -> None:
    text = "\n".join(trace_lines(result, problem, created)) + "\n"
    if hasattr(out, "write"):
        out.write(text)
    else:
        Path(out).write_text(text)


@dataclasses.dataclass(frozen=True)
class TraceFile:
    problem: str
    created: str
    result: SolveResult


def _record(obj: dict) -> IterationRecord:
    try:
        return IterationRecord(
            index=int(obj["index"]),
            x=np.array([_parse_num(v) for v in obj["x"]], dtype=float),
            f=_parse_num(obj["f"]),
            grad_norm=_parse_num(obj["grad_norm"]),
            decrement=_parse_num(obj["decrement"]),
            direction_norm=_parse_num(obj["direction_norm"]),
            step_length=_parse_num(obj["step_length"]),
            full_step_accepted=bool(obj["full_step_accepted"]),
            f_decrease=_parse_num(obj["f_decrease"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedTraceError):
            raise
        raise MalformedTraceError(f"bad record {obj!r}: {exc}") from None


def parse_trace(lines: Iterable[str]) -> TraceFile:
    """Rebuild a SolveResult from trace lines; raises MalformedTraceError."""
    objs = []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedTraceError(f"line {n}: {exc}") from None
        if not isinstance(obj, dict) or "type" not in obj:
            raise MalformedTraceError(f"line {n}: expected an object with a type field")
        objs.append(obj)
    if len(objs) < 2 or objs[0]["type"] != "header" or objs[-1]["type"] != "trailer":
        raise MalformedTraceError("trace needs a header line first and a trailer line last")
    header, trailer, body = objs[0], objs[-1], objs[1:-1]
    if any(o["type"] != "record" for o in body):
        raise MalformedTraceError("only record lines may sit between header and trailer")
    if header.get("format") != FORMAT:
        raise MalformedTraceError(f"unknown trace format {header.get('format')!r}")
    try:
        raw = dict(header["config"])
        for k in ("epsilon", "m", "L", "armijo_alpha", "backtrack_rho", "min_step"):
            if raw.get(k) is not None:
                raw[k] = _parse_num(raw[k])
        cfg = SolverConfig(**raw)
        status = Status(trailer["status"])
        final_x = np.array([_parse_num(v) for v in trailer["final_x"]], dtype=float)
        result = SolveResult(status, final_x, [_record(o) for o in body], str(trailer.get("detail", "")),
                             str(header["solver"]), str(header["decrement_kind"]), cfg)
    except MalformedTraceError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedTraceError(f"bad header or trailer: {exc}") from None
    if trailer.get("iterations") != result.iterations:
        raise MalformedTraceError("trailer iteration count does not match the records")
    return TraceFile(str(header["problem"]), str(header.get("created", "")), result)


def read_trace(path: str | Path) -> TraceFile:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedTraceError(f"cannot read {path}: {exc}") from None
    return parse_trace(text.splitlines())
