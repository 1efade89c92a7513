"""Result records and flat CSV tables written by the CLI."""

import csv
import dataclasses
import io
import json
from datetime import datetime, timezone
from importlib import resources

import numpy as np

from .experiments import TrainConfig

SCHEMA_VERSION = 1
CONFIG_FIELDS = [f.name for f in dataclasses.fields(TrainConfig)]
OUTCOME_COLUMNS = ["p00", "p01", "p10", "p11"]
RUN_COLUMNS = (
    ["experiment", "group"]
    + CONFIG_FIELDS
    + ["loss", "p_err", "p_inc", "cost"]
    + OUTCOME_COLUMNS
    + ["converged_step", "final_thetas"]
)
FIDELITY_COLUMNS = ["experiment", "kind", "mu_a", "p", "n", "numeric", "expansion", "abs_diff"]
TRACE_COLUMNS = ["step", "cost", "p_err", "p_inc", "loss"]


def load_schema():
    text = resources.files("qsd").joinpath("schema/result_record.schema.json").read_text()
    return json.loads(text)


def make_record(experiment, config, payload, timestamp=None):
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "timestamp": timestamp,
        "config": config,
        "payload": payload,
    }


def dumps_record(record):
    return json.dumps(record, indent=2, sort_keys=True, allow_nan=False)


def read_record(path):
    with open(path) as fh:
        return json.load(fh)


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(repr(float(v)) for v in value)
    return str(value)


def run_row(experiment, group, run, config=None):
    """Flat row for one trained network.  ``config`` overrides the echoed
    config (used when a run is re-validated at another noise level)."""
    cfg = (config or run.config).as_dict()
    val = run.validation
    row = {"experiment": experiment, "group": group}
    row.update(cfg)
    row.update(loss=val.loss, p_err=val.p_err, p_inc=val.p_inc, cost=val.cost)
    row.update(dict(zip(OUTCOME_COLUMNS, run.outcome_distribution)))
    row.update(converged_step=run.converged_step, final_thetas=run.final_thetas)
    return row


def to_csv(rows, columns):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def trace_csv(run):
    rows = [
        {"step": i, "cost": c, "p_err": e, "p_inc": n, "loss": e + n}
        for i, (c, e, n) in enumerate(run.cost_trace)
    ]
    return to_csv(rows, TRACE_COLUMNS)
