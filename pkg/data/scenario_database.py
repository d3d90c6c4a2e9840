import json
import logging
import math
import os
import uuid
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import pandas as pd
from sqlalchemy import create_engine, text
from sqlalchemy.engine import Engine

import config

logger = logging.getLogger(__name__)

CELL_COLUMNS = (
    "rho", "energy_mwh", "power_limit_mw", "ens_mwh", "peak_shedding_mw", "peak_shave_mw",
    "residual_ens_mwh", "residual_peak_mw", "energy_used_mwh", "zero_residual_energy_mwh",
    "zero_residual_power_mw", "cost_usd", "deployed_storage_cost_usd",
)


class ScenarioDatabase:
    """
    Results store for sweep grids. One row per sweep in `sweep_runs` and one
    row per grid cell in `sweep_cells`. Works with any SQLAlchemy URL; the
    default is a SQLite file next to the bundled fixtures.
    """

    def __init__(self, url: str = None):
        self.url = url or config.RESULTS_DB_URL
        if self.url.startswith("sqlite:///") and self.url != "sqlite:///:memory:":
            path = self.url[len("sqlite:///"):]
            if os.path.dirname(path):
                os.makedirs(os.path.dirname(path), exist_ok=True)
        self.engine: Engine = create_engine(self.url)
        self.init_database()

    def init_database(self):
        """Create the tables if they don't exist."""
        with self.engine.begin() as conn:
            conn.execute(text('''
                CREATE TABLE IF NOT EXISTS sweep_runs (
                    run_id TEXT PRIMARY KEY,
                    kind TEXT NOT NULL,
                    objective TEXT NOT NULL,
                    profile TEXT,
                    n_rho INTEGER NOT NULL,
                    n_storage INTEGER NOT NULL,
                    zero_crossings TEXT,
                    parameters TEXT,
                    created_at TEXT NOT NULL
                )
            '''))
            columns = ",\n".join(f"{name} DOUBLE PRECISION" for name in CELL_COLUMNS)
            conn.execute(text(f'''
                CREATE TABLE IF NOT EXISTS sweep_cells (
                    run_id TEXT NOT NULL,
                    i INTEGER NOT NULL,
                    j INTEGER NOT NULL,
                    objective TEXT NOT NULL,
                    {columns},
                    PRIMARY KEY (run_id, i, j),
                    FOREIGN KEY (run_id) REFERENCES sweep_runs (run_id)
                )
            '''))

    def save_sweep(
        self,
        grid,
        kind: str,
        profile: Optional[str] = None,
        parameters: Optional[Dict[str, Any]] = None,
        run_id: Optional[str] = None,
    ) -> str:
        """
        Save a SweepGrid with all its cells.
        Returns the run_id that was saved.
        """
        run_id = run_id or uuid.uuid4().hex
        crossings = [grid.zero_crossings.get(j) for j in range(grid.shape[1])] if grid.zero_crossings else None
        cells = []
        for (i, j), report in sorted(grid.reports.items()):
            record = report.to_record()
            row = {"run_id": run_id, "i": i, "j": j, "objective": record["objective"]}
            for name in CELL_COLUMNS:
                value = record[name]
                row[name] = None if value is None or (isinstance(value, float) and math.isinf(value)) else value
            cells.append(row)

        with self.engine.begin() as conn:
            conn.execute(text('DELETE FROM sweep_cells WHERE run_id = :run_id'), {"run_id": run_id})
            conn.execute(text('DELETE FROM sweep_runs WHERE run_id = :run_id'), {"run_id": run_id})
            conn.execute(
                text('''
                    INSERT INTO sweep_runs (
                        run_id, kind, objective, profile, n_rho, n_storage, zero_crossings, parameters, created_at
                    ) VALUES (
                        :run_id, :kind, :objective, :profile, :n_rho, :n_storage, :zero_crossings, :parameters, :created_at
                    )
                '''),
                {
                    "run_id": run_id,
                    "kind": kind,
                    "objective": grid.objective,
                    "profile": profile,
                    "n_rho": grid.shape[0],
                    "n_storage": grid.shape[1],
                    "zero_crossings": json.dumps(crossings),
                    "parameters": json.dumps(parameters or {}, sort_keys=True),
                    "created_at": datetime.now(timezone.utc).isoformat(),
                },
            )
            names = ", ".join(("run_id", "i", "j", "objective") + CELL_COLUMNS)
            values = ", ".join(f":{name}" for name in ("run_id", "i", "j", "objective") + CELL_COLUMNS)
            conn.execute(text(f'INSERT INTO sweep_cells ({names}) VALUES ({values})'), cells)

        logger.info(f"Saved sweep {run_id} ({kind}, {len(cells)} cells) to {self.engine.url}")
        return run_id

    def list_runs(self, kind: Optional[str] = None) -> List[Dict[str, Any]]:
        """List saved sweeps, newest first, optionally filtered by kind."""
        query = 'SELECT * FROM sweep_runs'
        params: Dict[str, Any] = {}
        if kind:
            query += ' WHERE kind = :kind'
            params["kind"] = kind
        query += ' ORDER BY created_at DESC'
        with self.engine.connect() as conn:
            rows = conn.execute(text(query), params).mappings().all()
        runs = []
        for row in rows:
            run = dict(row)
            run["zero_crossings"] = json.loads(run["zero_crossings"]) if run["zero_crossings"] else None
            run["parameters"] = json.loads(run["parameters"]) if run["parameters"] else {}
            runs.append(run)
        return runs

    def load_cells(self, run_id: str) -> pd.DataFrame:
        """All cells of one sweep in (i, j) order; empty when the run does not exist."""
        with self.engine.connect() as conn:
            return pd.read_sql_query(
                text('SELECT * FROM sweep_cells WHERE run_id = :run_id ORDER BY i, j'),
                conn,
                params={"run_id": run_id},
            )

    def delete_run(self, run_id: str) -> bool:
        """Delete a sweep and its cells."""
        with self.engine.begin() as conn:
            conn.execute(text('DELETE FROM sweep_cells WHERE run_id = :run_id'), {"run_id": run_id})
            result = conn.execute(text('DELETE FROM sweep_runs WHERE run_id = :run_id'), {"run_id": run_id})
            return result.rowcount > 0

    def get_database_stats(self) -> Dict[str, Any]:
        with self.engine.connect() as conn:
            return {
                "sweep_runs_count": conn.execute(text('SELECT COUNT(*) FROM sweep_runs')).scalar(),
                "sweep_cells_count": conn.execute(text('SELECT COUNT(*) FROM sweep_cells')).scalar(),
            }
