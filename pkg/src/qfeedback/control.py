"""Cloning-based feedback loop, scenario dispatch and trajectory export."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional, Sequence

from .actuator import actuator_update, has_direction
from .cloning import clone, split_copies
from .config import LoopConfig, TrajectoryRecord
from .core import RngStream, apply_unitary, canonical_phase, fidelity
from .plant import apply_noise
from .recognition import GateSignal, gate_signal
from .teleport import BellOutcome, run_teleport_loop

CSV_COLUMNS = ("cycle", "fidelity_to_target", "bell_outcome", "max_distance",
               "gate_signal", "actuator_applied")


def run_clone_loop(config: LoopConfig, rng: Optional[RngStream] = None,
                   feedback: bool = True) -> list[TrajectoryRecord]:
    """Closed loop through the cloner and recognizer.

    Each cycle: noise on the object, clone to N+M+1 copies, recognize the
    first N, and on "On" rotate the object using the first feedback copy.
    ``feedback=False`` runs the same loop with the actuator disconnected,
    as an open-loop baseline.
    """
    config.validate(scenario="clone")
    rng = rng if rng is not None else RngStream(config.rng_seed)
    n, m = config.cloner.N, config.cloner.M
    rec_cfg = config.recognizer
    bases = rec_cfg.parsed_bases()
    target = config.target_state()
    obj = config.initial_state()
    records = []
    for cycle in range(1, config.cycles + 1):
        obj = apply_noise(obj, config.noise, rng)
        split = split_copies(clone(obj, n + m + 1), n, m)
        if rec_cfg.mode == "oracle":
            # simulation-only: the recognizer is handed the true pure state
            seen = [obj] * n
        else:
            seen = split.recognizer_copies()
        report = gate_signal(seen, rec_cfg.d0, rec_cfg.mode, bases, rng,
                             rec_cfg.merge_tolerance)
        applied = False
        if feedback and report.signal is GateSignal.On:
            fed_back = split.feedback_copies()[0]
            if has_direction(fed_back):
                obj = apply_unitary(obj, actuator_update(fed_back, target), [0])
                applied = True
        obj = canonical_phase(obj)
        records.append(TrajectoryRecord(
            cycle=cycle,
            fidelity_to_target=fidelity(target, obj),
            recognizer_max_distance=report.max_distance,
            gate_signal=report.signal,
            actuator_applied=applied,
        ))
    return records


def run_teleport_scenario(config: LoopConfig, rng: Optional[RngStream] = None):
    return run_teleport_loop(config, rng)


def run_scenario(config: LoopConfig, **kwargs) -> list[TrajectoryRecord]:
    if config.scenario == "teleport":
        return run_teleport_scenario(config, **kwargs)
    return run_clone_loop(config, **kwargs)


def _fmt(x: Optional[float]) -> Optional[str]:
    return None if x is None else f"{x:.9g}"


def record_to_row(r: TrajectoryRecord) -> dict:
    return {
        "cycle": r.cycle,
        "fidelity_to_target": _fmt(r.fidelity_to_target),
        "bell_outcome": None if r.bell_outcome is None else r.bell_outcome.name,
        "max_distance": _fmt(r.recognizer_max_distance),
        "gate_signal": None if r.gate_signal is None else r.gate_signal.value,
        "actuator_applied": r.actuator_applied,
    }


def _csv_text(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        row = record_to_row(r)
        row["actuator_applied"] = "true" if r.actuator_applied else "false"
        writer.writerow(["" if row[c] is None else row[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def _json_text(records) -> str:
    rows = []
    for r in records:
        row = record_to_row(r)
        for key in ("fidelity_to_target", "max_distance"):
            if row[key] is not None:
                # the formatted string is the rounding; emit it as a number
                row[key] = float(row[key])
        rows.append(row)
    return json.dumps(rows, indent=2) + "\n"


def format_trajectory(records: Sequence[TrajectoryRecord], fmt: str = "csv") -> str:
    if not records:
        raise ValueError("no records to export")
    if fmt == "csv":
        return _csv_text(records)
    if fmt == "json":
        return _json_text(records)
    raise ValueError(f"unknown format {fmt!r}; expected 'csv' or 'json'")


def export_trajectory(records: Sequence[TrajectoryRecord], fmt: str, path) -> Path:
    text = format_trajectory(records, fmt)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _parse_row(row: dict) -> TrajectoryRecord:
    def num(v):
        return None if v in (None, "") else float(v)

    applied = row["actuator_applied"]
    if isinstance(applied, str):
        applied = applied == "true"
    return TrajectoryRecord(
        cycle=int(row["cycle"]),
        fidelity_to_target=num(row["fidelity_to_target"]),
        bell_outcome=BellOutcome[row["bell_outcome"]] if row["bell_outcome"] else None,
        recognizer_max_distance=num(row["max_distance"]),
        gate_signal=GateSignal(row["gate_signal"]) if row["gate_signal"] else None,
        actuator_applied=bool(applied),
    )


def load_trajectory(path, fmt: Optional[str] = None) -> list[TrajectoryRecord]:
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    text = path.read_text()
    if fmt == "json":
        return [_parse_row(row) for row in json.loads(text)]
    if fmt == "csv":
        return [_parse_row(row) for row in csv.DictReader(io.StringIO(text))]
    raise ValueError(f"unknown format {fmt!r}")
