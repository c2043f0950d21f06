"""Line-delimited trajectory log IO.

One JSON object per line, UTF-8, canonical field order. Fields this toolkit
does not know about are preserved on read and re-emitted after the known
fields, in their original order, so records written by newer producers
round-trip byte-identically through parse/serialize.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Iterable, Iterator

from .core import TrajectoryRecord

FIELD_ORDER = (
    "experiment_id",
    "benchmark",
    "config",
    "sample_id",
    "taint_id",
    "step_outputs",
    "step_error_flags",
    "audit_correct",
    "refusal",
    "terminal_error",
    "seed",
)


class LogFormatError(ValueError):
    """A malformed log line, carrying its 1-based line number."""

    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def record_to_json(record: TrajectoryRecord) -> str:
    payload: dict[str, object] = {
        "experiment_id": record.experiment_id,
        "benchmark": record.benchmark,
        "config": record.config,
        "sample_id": record.sample_id,
        "taint_id": record.taint_id,
        "step_outputs": list(record.step_outputs),
        "step_error_flags": list(record.step_error_flags),
        "audit_correct": record.audit_correct,
        "refusal": record.refusal,
        "terminal_error": record.terminal_error,
        "seed": record.seed,
    }
    for key, value in record.extra.items():
        payload[key] = value
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


def record_from_json(line: str, line_number: int = 0) -> TrajectoryRecord:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise LogFormatError(line_number, f"invalid JSON ({exc.msg})") from None
    if not isinstance(payload, dict):
        raise LogFormatError(line_number, "record must be a JSON object")
    missing = [f for f in FIELD_ORDER if f not in payload]
    if missing:
        raise LogFormatError(line_number, f"missing fields: {missing}")
    extra = {k: v for k, v in payload.items() if k not in FIELD_ORDER}
    try:
        return TrajectoryRecord(
            experiment_id=payload["experiment_id"],
            benchmark=payload["benchmark"],
            config=payload["config"],
            sample_id=int(payload["sample_id"]),
            taint_id=payload["taint_id"],
            step_outputs=tuple(payload["step_outputs"]),
            step_error_flags=tuple(bool(x) for x in payload["step_error_flags"]),
            audit_correct=bool(payload["audit_correct"]),
            refusal=bool(payload["refusal"]),
            terminal_error=bool(payload["terminal_error"]),
            seed=int(payload["seed"]),
            extra=extra,
        )
    except (TypeError, ValueError) as exc:
        raise LogFormatError(line_number, str(exc)) from None


def append_record(handle: IO[str], record: TrajectoryRecord) -> None:
    handle.write(record_to_json(record) + "\n")
    handle.flush()


def write_records(path: str | Path, records: Iterable[TrajectoryRecord]) -> int:
    """Write a whole log, returning the record count."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            append_record(handle, record)
            count += 1
    return count


def iter_records(path: str | Path) -> Iterator[TrajectoryRecord]:
    """Stream records from a log, raising LogFormatError with the line number."""
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            yield record_from_json(line, number)


def read_records(path: str | Path) -> list[TrajectoryRecord]:
    return list(iter_records(path))
