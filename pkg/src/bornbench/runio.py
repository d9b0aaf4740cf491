"""On-disk layout of a run directory.

    <run>/config.txt               full config echo plus tool version and digest
    <run>/metrics.csv              one row per evaluated step
    <run>/theta_trajectory.csv     rotation angles at every step
    <run>/final_theta.json         angles after the last step
    <run>/checkpoints/step_NNNNNN.json

Floats are written with ``repr`` so files round-trip bit-exactly and reruns
with the same config digest and seed are byte-identical.
"""

from __future__ import annotations

import csv
import shutil
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .bas import bitstring
from .kv import format_kv, parse_kv_file
from .noise import load_noise, noise_from_items
from .training import Checkpoint, RunConfig, RunRecord, load_checkpoint, save_checkpoint
from .ansatz import parse_edge_list

CONFIG_FILE = "config.txt"
METRICS_FILE = "metrics.csv"
TRAJECTORY_FILE = "theta_trajectory.csv"
FINAL_THETA_FILE = "final_theta.json"
CHECKPOINT_DIR = "checkpoints"

_BOOL_FIELDS = ("sigma_is_variance", "qbas_enabled")
_INT_FIELDS = (
    "d_c",
    "n_layers",
    "n_shots_train",
    "n_steps",
    "seed",
    "n_rows",
    "n_cols",
    "kl_shots",
    "kl_repeats",
    "metric_every",
    "checkpoint_every",
    "qbas_shots",
    "qbas_repeats",
    "qbas_sample_size",
    "qbas_resamples",
)
_FLOAT_FIELDS = ("alpha", "beta1", "beta2", "epsilon", "sigma")
_STR_FIELDS = ("label", "kernel_distance", "gradient_mode")


def config_from_items(items: dict[str, str], base_dir: Path | None = None) -> RunConfig:
    """Build a RunConfig from key/value strings; unknown keys are errors.

    Noise is given either as ``noise_profile = <file>`` (resolved relative to
    ``base_dir``) or inline through ``noise_*`` keys.
    """
    known = {f.name for f in fields(RunConfig)}
    kwargs: dict = {}
    noise_items: dict[str, str] = {}
    noise_profile: str | None = None
    for key, value in items.items():
        if key == "noise_profile":
            noise_profile = value
        elif key.startswith("noise_"):
            noise_items[key[len("noise_"):]] = value
        elif key == "dc3_edges":
            kwargs[key] = parse_edge_list(value)
        elif key in _BOOL_FIELDS:
            if value.lower() not in ("true", "false"):
                raise ValueError(f"{key}: expected true or false, got {value!r}")
            kwargs[key] = value.lower() == "true"
        elif key in _INT_FIELDS:
            kwargs[key] = int(value)
        elif key in _FLOAT_FIELDS:
            kwargs[key] = float(value)
        elif key in _STR_FIELDS:
            kwargs[key] = value
        elif key in known:
            raise ValueError(f"config key {key!r} cannot be set from a file")
        else:
            raise ValueError(f"unknown config key {key!r}")
    if noise_profile is not None:
        if noise_items:
            raise ValueError("give either noise_profile or inline noise_* keys, not both")
        profile_path = Path(noise_profile)
        if base_dir is not None and not profile_path.is_absolute():
            profile_path = base_dir / profile_path
        kwargs["noise"] = load_noise(profile_path)
    elif noise_items:
        kwargs["noise"] = noise_from_items(noise_items)
    if "d_c" not in kwargs or "n_layers" not in kwargs:
        raise ValueError("config must set d_c and n_layers")
    return RunConfig(**kwargs)


def load_config_file(path) -> RunConfig:
    path = Path(path)
    return config_from_items(parse_kv_file(path), base_dir=path.parent)


def config_echo_text(config: RunConfig) -> str:
    header = f"# bornbench {__version__}\n# digest = {config.digest()}\n"
    return header + format_kv(config.kv_items())


def metric_columns(config: RunConfig) -> list[str]:
    states = config.bas_states()
    f1_cols = [f"f1_{bitstring(s, config.n_qubits)}" for s in states]
    return ["step", "loss", "kl_mean", "kl_std", *f1_cols, "qbas_mean", "qbas_var", "smoothing_flag"]


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_metrics_csv(path, config: RunConfig, record: RunRecord) -> None:
    states = config.bas_states()
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(metric_columns(config))
        for metric in record.metrics:
            row = [
                str(metric.step),
                _fmt(record.losses.get(metric.step)),
                _fmt(metric.kl_mean),
                _fmt(metric.kl_std),
            ]
            row.extend(_fmt(metric.f1.get(s, 0.0)) for s in states)
            row.append(_fmt(metric.qbas_mean))
            row.append(_fmt(metric.qbas_var))
            row.append("1" if metric.smoothing_used else "0")
            writer.writerow(row)


def write_trajectory_csv(path, record: RunRecord) -> None:
    n_params = record.theta_trajectory.shape[1]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", *(f"theta_{i}" for i in range(n_params))])
        for step, theta in zip(record.steps, record.theta_trajectory):
            writer.writerow([str(step), *(repr(float(t)) for t in theta)])


def read_trajectory(run_dir) -> tuple[list[int], np.ndarray]:
    path = Path(run_dir) / TRAJECTORY_FILE
    steps: list[int] = []
    rows: list[list[float]] = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        next(reader)
        for row in reader:
            steps.append(int(row[0]))
            rows.append([float(x) for x in row[1:]])
    return steps, np.asarray(rows)


def checkpoint_path(run_dir, step: int) -> Path:
    return Path(run_dir) / CHECKPOINT_DIR / f"step_{step:06d}.json"


def prepare_run_dir(out_dir, force: bool = False) -> Path:
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()):
        if not force:
            raise FileExistsError(
                f"output directory {out_dir} already exists; pass --force to overwrite"
            )
        shutil.rmtree(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def write_run(out_dir, config: RunConfig, record: RunRecord, force: bool = False) -> Path:
    out_dir = prepare_run_dir(out_dir, force=force)
    (out_dir / CONFIG_FILE).write_text(config_echo_text(config))
    write_metrics_csv(out_dir / METRICS_FILE, config, record)
    write_trajectory_csv(out_dir / TRAJECTORY_FILE, record)
    final = record.final_theta
    (out_dir / FINAL_THETA_FILE).write_text(
        '{"step": %d, "theta": [%s]}\n'
        % (record.final_step, ", ".join(repr(float(t)) for t in final))
    )
    (out_dir / CHECKPOINT_DIR).mkdir(exist_ok=True)
    for checkpoint in record.checkpoints:
        save_checkpoint(checkpoint, checkpoint_path(out_dir, checkpoint.step))
    return out_dir


def read_run_config(run_dir) -> RunConfig:
    run_dir = Path(run_dir)
    return config_from_items(parse_kv_file(run_dir / CONFIG_FILE), base_dir=run_dir)


def read_checkpoint(run_dir, step: int) -> Checkpoint:
    path = checkpoint_path(run_dir, step)
    if not path.exists():
        available = sorted(
            int(p.stem.split("_")[1]) for p in (Path(run_dir) / CHECKPOINT_DIR).glob("step_*.json")
        )
        raise FileNotFoundError(
            f"no checkpoint at step {step} in {run_dir}; available: {available}"
        )
    return load_checkpoint(path)
