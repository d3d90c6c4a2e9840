"""
Writers for sweep results.

CSV files are long form, one row per grid cell or sample, with unit-suffixed
column names. JSON documents mirror SweepGrid. Numbers carry 6 significant
digits and keys are sorted so identical inputs give byte-identical files.
"""

import json
import logging
import math
import os
from typing import Dict, Iterable, List, Sequence

import pandas as pd

from data.profiles import TIMESTAMP_FORMAT, SheddingSeries
from sweep.engine import SweepGrid

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6g"
FORMATS = ("csv", "json")


def _round(value):
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.6g}")
    if isinstance(value, dict):
        return {str(k): _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    return value


def grid_frame(grid: SweepGrid) -> pd.DataFrame:
    frame = pd.DataFrame(grid.records())
    frame.insert(0, "j", [j for i in range(grid.shape[0]) for j in range(grid.shape[1])])
    frame.insert(0, "i", [i for i in range(grid.shape[0]) for _ in range(grid.shape[1])])
    return frame


def grid_document(grid: SweepGrid) -> Dict[str, object]:
    return {
        "objective": grid.objective,
        "rho_values": list(grid.rho_values),
        "energy_values_mwh": list(grid.energy_values),
        "power_limits_mw": [spec.power_limit_mw for spec in grid.storage],
        "zero_crossings": [grid.zero_crossings.get(j) for j in range(grid.shape[1])] if grid.zero_crossings else None,
        "refined_crossings": (
            [grid.refined_crossings.get(j) for j in range(grid.shape[1])] if grid.refined_crossings else None
        ),
        "cells": [dict(i=i, j=j, **grid.reports[(i, j)].to_record()) for (i, j) in sorted(grid.reports)],
    }


def trajectories_frame(trajectories: Sequence[SheddingSeries], rho_values: Sequence[float]) -> pd.DataFrame:
    frames = []
    for rho, series in zip(rho_values, trajectories):
        frames.append(pd.DataFrame({
            "timestamp": series.grid.index().strftime(TIMESTAMP_FORMAT),
            "rho": float(rho),
            "shedding_mw": series.values,
        }))
    return pd.concat(frames, ignore_index=True)


def _ensure_parent(path) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_frame(frame: pd.DataFrame, path) -> None:
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")


def write_json(document, path) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(_round(document), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote JSON document to {path}")


def write_records(records: Iterable[Dict[str, object]], path, fmt: str = "csv") -> None:
    """Write flat result records (one per scenario) as CSV rows or a JSON list."""
    records: List[Dict[str, object]] = list(records)
    if fmt == "csv":
        write_frame(pd.DataFrame(records), path)
    elif fmt == "json":
        write_json(records, path)
    else:
        raise ValueError(f"unknown format '{fmt}', expected one of {FORMATS}")


def write_grid(grid: SweepGrid, path, fmt: str = "csv") -> None:
    if fmt == "csv":
        write_frame(grid_frame(grid), path)
    elif fmt == "json":
        write_json(grid_document(grid), path)
    else:
        raise ValueError(f"unknown format '{fmt}', expected one of {FORMATS}")


def write_trajectories(trajectories: Sequence[SheddingSeries], rho_values: Sequence[float], path, fmt: str = "csv") -> None:
    frame = trajectories_frame(trajectories, rho_values)
    if fmt == "csv":
        write_frame(frame, path)
    elif fmt == "json":
        write_json({
            "rho_values": [float(r) for r in rho_values],
            "timestamps": list(frame["timestamp"].iloc[: len(trajectories[0].values)]) if trajectories else [],
            "shedding_mw": [list(map(float, series.values)) for series in trajectories],
        }, path)
    else:
        raise ValueError(f"unknown format '{fmt}', expected one of {FORMATS}")
