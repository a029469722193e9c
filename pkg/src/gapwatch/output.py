"""Run artefacts: records CSV, event log (JSON lines) and summary JSON.

records.csv
    One row per (step, vehicle) with header ``CSV_COLUMNS``. Floats are
    written with 9 significant digits, ``violation`` as 0/1.
events.jsonl
    One object per line. ``kind`` is ``"violation"`` (keys ``t``,
    ``vehicle_id``, ``value``, ``side``, ``limits``) or ``"trigger"`` (adds
    ``from_tau_star``, ``to_tau_star`` and the list ``retuned``). ``limits``
    is ``{"lcl", "cl", "ucl"}``; ``value`` is the charted time gap.
summary.json
    ``{"aborted": bool, "abort_reason": str|null, "vehicles": {"<id>": {...}}}``
    where each vehicle entry has ``tau_hat_max``, ``tau_hat_min``,
    ``tau_hat_std``, ``violations`` (excursion count), ``trigger_times``,
    ``max_abs_spacing_error`` and ``regimes``: a list of
    ``{tau_star, t_start, t_end, max_abs_deviation, tau_hat_std}``, one per
    time-gap setting in force.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .simulator import SimRecord

CSV_COLUMNS = ("t", "vehicle_id", "x", "v", "a", "u", "spacing_true", "spacing_measured",
               "tau_hat", "tau_var", "lcl", "ucl", "violation", "active_tau_star")


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_records_csv(records, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in records:
            fh.write(",".join((
                _fmt(r.t), str(r.vehicle_id), _fmt(r.x), _fmt(r.v), _fmt(r.a), _fmt(r.u),
                _fmt(r.spacing_true), _fmt(r.spacing_measured), _fmt(r.tau_hat),
                _fmt(r.tau_var), _fmt(r.lcl), _fmt(r.ucl), "1" if r.violation else "0",
                _fmt(r.active_tau_star))) + "\n")
    return path


def read_records_csv(path) -> list:
    """Records back from CSV. ``charted`` is not stored and reads as True."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(SimRecord(
                float(row["t"]), int(row["vehicle_id"]), float(row["x"]), float(row["v"]),
                float(row["a"]), float(row["u"]), float(row["spacing_true"]),
                float(row["spacing_measured"]), float(row["tau_hat"]), float(row["tau_var"]),
                float(row["lcl"]), float(row["ucl"]), row["violation"] == "1",
                float(row["active_tau_star"])))
    return out


def write_events_jsonl(events, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps(ev, sort_keys=True) + "\n")
    return path


def write_summary_json(summary: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_outputs(result, out_dir) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return {
        "records": write_records_csv(result.records, out_dir / "records.csv"),
        "events": write_events_jsonl(result.events, out_dir / "events.jsonl"),
        "summary": write_summary_json(result.summary(), out_dir / "summary.json"),
    }
