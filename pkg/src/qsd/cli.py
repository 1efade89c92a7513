"""Command-line front end: ``qsd <experiment> [options]``."""

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import records
from .fidelity import fidelity_table

log = logging.getLogger("qsd")

COMMANDS = {
    "train": "single training run (convergence curve, Fig. 5 style trace)",
    "repeat": "repeated training at one setting (Fig. 6 cell)",
    "cost-bias": "error-biased vs balanced cost weights (Fig. 3)",
    "compare-circuits": "long vs reduced circuit across noise levels (Figs. 4 and 5)",
    "noise-sweep": "train = validation noise sweep (Fig. 6)",
    "noise-cross": "train at one noise level, validate at another (Fig. 7)",
    "mu-sweep": "loss against mu_a with the fidelity-model overlay (Fig. 8)",
    "fidelity-model": "exact vs first-order fidelities (Fig. 9)",
    "param-dist": "spread of one trained angle against noise (Fig. 10)",
}

# flag name -> TrainConfig field
CONFIG_FLAGS = {
    "circuit": str,
    "noise": float,
    "validation_noise": float,
    "mu_a": float,
    "sigma_a": float,
    "alpha_err": float,
    "alpha_inc": float,
    "batch_size": int,
    "validation_size": int,
    "max_steps": int,
    "window": int,
    "rel_tol": float,
    "lr": float,
    "seed": int,
}
LIST_KEYS = ("levels", "validation_levels", "mu_values")
EXPERIMENT_DEFAULTS = {
    "repeats": ex.DEFAULT_REPEATS,
    "levels": None,
    "validation_levels": None,
    "mu_values": None,
    "theta_index": 9,
}


class UsageError(Exception):
    pass


@dataclass
class ExperimentSpec:
    command: str
    config: ex.TrainConfig
    output_dir: Path = Path("results")
    format: str = "json"
    options: dict = field(default_factory=dict)


def _float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from err


def build_parser():
    epilog = "experiments:\n" + "\n".join(f"  {k:<18}{v}" for k, v in COMMANDS.items())
    epilog += "\n\nQSD_WORKERS caps the number of parallel worker processes."
    parser = argparse.ArgumentParser(
        prog="qsd",
        description="Train and analyse a noisy quantum neural network for state discrimination.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=list(COMMANDS), metavar="command",
                        help="one of: " + ", ".join(COMMANDS))
    parser.add_argument("--config", help="JSON file (or bundled preset name) with flat config keys")
    parser.add_argument("--circuit", choices=["short", "long"])
    parser.add_argument("--noise", type=float, help="two-qubit error probability during training")
    parser.add_argument("--validation-noise", type=float)
    parser.add_argument("--mu-a", type=float)
    parser.add_argument("--sigma-a", type=float)
    parser.add_argument("--alpha-err", type=float)
    parser.add_argument("--alpha-inc", type=float)
    parser.add_argument("--repeats", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--validation-size", type=int)
    parser.add_argument("--max-steps", type=int)
    parser.add_argument("--window", type=int, help="convergence window (steps)")
    parser.add_argument("--rel-tol", type=float, help="relative change that counts as converged")
    parser.add_argument("--lr", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--levels", type=_float_list, help="noise levels, comma separated")
    parser.add_argument("--validation-levels", type=_float_list)
    parser.add_argument("--mu-values", type=_float_list)
    parser.add_argument("--theta-index", type=int, help="0-based parameter slot for param-dist")
    parser.add_argument("--output", help="output directory (default: results)")
    parser.add_argument("--format", choices=["json", "csv"])
    return parser


def _resolve_config_path(name):
    path = Path(name)
    if path.exists():
        return path.read_text()
    preset = resources.files("qsd").joinpath("presets", path.name)
    if preset.is_file():
        return preset.read_text()
    raise UsageError(f"cannot read config file {name!r}")


def load_config_file(name):
    try:
        data = json.loads(_resolve_config_path(name))
    except json.JSONDecodeError as err:
        raise UsageError(f"config file {name!r} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _spec_from(args):
    values = load_config_file(args.config) if args.config else {}
    known = set(CONFIG_FLAGS) | set(EXPERIMENT_DEFAULTS) | {"output", "format", "command", "description"}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    if values.get("command", args.command) != args.command:
        log.warning("config file is meant for %r, running %r", values["command"], args.command)
    for key in list(CONFIG_FLAGS) + list(EXPERIMENT_DEFAULTS) + ["output", "format"]:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if "validation_noise" not in values and "noise" in values:
        values["validation_noise"] = values["noise"]
    cfg_values = {k: values[k] for k in CONFIG_FLAGS if k in values}
    try:
        config = ex.TrainConfig(**cfg_values)
    except (TypeError, ValueError) as err:
        raise UsageError(str(err)) from err
    options = {k: values.get(k, d) for k, d in EXPERIMENT_DEFAULTS.items()}
    if options["repeats"] < 1:
        raise UsageError("--repeats must be at least 1")
    for key in LIST_KEYS:
        if options[key] is not None:
            options[key] = [float(v) for v in options[key]]
    for p in (options["levels"] or []) + (options["validation_levels"] or []):
        if not 0.0 <= p <= 1.0:
            raise UsageError(f"noise level {p} outside [0, 1]")
    for mu in options["mu_values"] or []:
        if not 0.0 < mu <= 1.0:
            raise UsageError(f"mu_a value {mu} outside (0, 1]")
    return ExperimentSpec(
        command=args.command,
        config=config,
        output_dir=Path(values.get("output", "results")),
        format=values.get("format", "json"),
        options=options,
    )


def parse_args(argv):
    """Parse ``argv`` into an :class:`ExperimentSpec`; exits with status 2 on
    any usage error."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _spec_from(args)
    except UsageError as err:
        parser.error(str(err))


@dataclass
class Group:
    name: str
    result: ex.RepeatResult
    extra: dict = field(default_factory=dict)
    traces: bool = True


def _levels(spec, default):
    return tuple(spec.options["levels"]) if spec.options["levels"] else default


def run_experiment(spec):
    """Run the experiment; returns ``(groups, fidelity_rows)``."""
    cfg, opt, cmd = spec.config, spec.options, spec.command
    repeats = opt["repeats"]
    if cmd == "fidelity-model":
        mus = tuple(opt["mu_values"] or (0.25, 0.5, 0.75))
        return [], fidelity_table(mus, _levels(spec, (0.001, 0.01, 0.1)))
    if cmd == "train":
        return [Group("train", ex.RepeatResult(cfg, [ex.train(cfg)]))], None
    if cmd == "repeat":
        return [Group("repeat", ex.repeat_runs(cfg, repeats))], None
    if cmd == "cost-bias":
        res = ex.cost_bias_experiment(cfg, repeats)
        return [Group(k, v) for k, v in res.items()], None
    if cmd == "noise-sweep":
        res = ex.noise_sweep_experiment(cfg, _levels(spec, ex.NOISE_GRID), repeats)
        return [Group(f"p={p}", r) for p, r in res.items()], None
    if cmd == "compare-circuits":
        res = ex.compare_circuits_experiment(cfg, _levels(spec, (0.0, 0.001, 0.01, 0.1)), repeats)
        return [Group(f"{c}/p={p}", r) for c, sweep in res.items() for p, r in sweep.items()], None
    if cmd == "noise-cross":
        vlevels = tuple(opt["validation_levels"] or ex.NOISE_GRID)
        res = ex.noise_cross_experiment(cfg, _levels(spec, ex.NOISE_GRID), vlevels, repeats)
        groups = []
        for tp, row in res.items():
            for vp, r in row.items():
                groups.append(Group(f"train={tp}/validate={vp}", r, {"train_noise": tp}, vp == vlevels[0]))
        return groups, None
    if cmd == "mu-sweep":
        mus = tuple(opt["mu_values"] or (0.25, 0.5, 0.75))
        res = ex.mu_sweep_experiment(cfg, mus, _levels(spec, (0.0, 0.001, 0.01, 0.1)), repeats)
        return [
            Group(f"mu={mu}/p={p}", cell["runs"], {"model_loss": cell["model"]})
            for (mu, p), cell in res.items()
        ], None
    if cmd == "param-dist":
        idx = opt["theta_index"]
        levels = _levels(spec, (0.0, 0.001, 0.01, 0.1))
        if not 0 <= idx < cfg.kind.n_params:
            raise UsageError(f"theta index {idx} out of range for {cfg.circuit} circuit")
        groups = []
        for p in levels:
            r = ex.repeat_runs(cfg.replace(noise=p, validation_noise=0.0), repeats)
            angles = [float(np.mod(run.final_thetas[idx], 2 * np.pi)) for run in r.runs]
            groups.append(Group(f"p={p}", r, {
                "theta_index": idx, "angles": angles, "circular_std": ex.circular_std(angles),
            }))
        return groups, None
    raise UsageError(f"unknown command {cmd!r}")


def _group_payload(g):
    runs = []
    for run in g.result.runs:
        d = run.as_dict()
        d.pop("cost_trace")
        runs.append(d)
    return {"group": g.name, "config": g.result.config.as_dict(), "stats": g.result.summary(),
            "extra": g.extra, "runs": runs}


def build_outputs(spec, groups, fidelity_rows, timestamp=None):
    """Map of file name -> text for every output file."""
    files = {}
    if fidelity_rows is not None:
        rows = [dict(r, experiment=spec.command) for r in fidelity_rows]
        payload = {"rows": fidelity_rows}
        files["results.csv"] = records.to_csv(rows, records.FIDELITY_COLUMNS)
    else:
        rows = [records.run_row(spec.command, g.name, run) for g in groups for run in g.result.runs]
        payload = {"groups": [_group_payload(g) for g in groups]}
        files["results.csv"] = records.to_csv(rows, records.RUN_COLUMNS)
        traced = [g for g in groups if g.traces]
        for g in traced:
            prefix = "" if len(traced) == 1 else g.name.replace("/", "_").replace("=", "") + "/"
            for run in g.result.runs:
                files[f"{prefix}trace_{run.config.seed}.csv"] = records.trace_csv(run)
    if spec.format == "json":
        options = {k: v for k, v in spec.options.items()}
        record = records.make_record(
            spec.command, {**spec.config.as_dict(), **options}, payload, timestamp
        )
        files["results.json"] = records.dumps_record(record) + "\n"
    return files


def write_outputs(output_dir, files):
    """Write all files or none: stage in a temporary directory, then move."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".qsd-", dir=output_dir))
    moved = []
    try:
        for name, text in files.items():
            path = staging / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        for name in files:
            dest = output_dir / name
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(staging / name, dest)
            moved.append(dest)
    except OSError:
        for path in moved:
            path.unlink(missing_ok=True)
        raise
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return [output_dir / n for n in files]


def summarize(groups, fidelity_rows):
    lines = []
    if fidelity_rows is not None:
        worst = max(r["abs_diff"] for r in fidelity_rows)
        lines.append(f"fidelity-model: {len(fidelity_rows)} rows, max |numeric - expansion| = {worst:.3e}")
    for g in groups:
        s = g.result.stats()
        lines.append(f"{g.name}: mean loss {s.mean:.4f}, median loss {s.median:.4f} (n={s.n})")
    return "\n".join(lines)


def run_and_persist(spec, out=None):
    """Run ``spec``, write its outputs and print a summary.  Returns the exit code."""
    out = sys.stdout if out is None else out
    try:
        groups, fidelity_rows = run_experiment(spec)
    except (ValueError, UsageError) as err:
        print(f"qsd: error: {err}", file=sys.stderr)
        return 2
    files = build_outputs(spec, groups, fidelity_rows)
    try:
        paths = write_outputs(spec.output_dir, files)
    except OSError as err:
        print(f"qsd: error writing results: {err}", file=sys.stderr)
        return 1
    print(summarize(groups, fidelity_rows), file=out)
    print(f"wrote {len(paths)} file(s) to {spec.output_dir}", file=out)
    return 0


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    spec = parse_args(sys.argv[1:] if argv is None else argv)
    return run_and_persist(spec)


if __name__ == "__main__":
    sys.exit(main())
