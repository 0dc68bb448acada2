"""
Command implementations behind the ``rahn`` entry point.

Each command takes a resolved ExperimentConfig, writes its artifacts under
``paths.output_dir`` and returns the report it produced. Every artifact
embeds the resolved configuration.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

from src.data.matrix_io import load_matrix, load_metadata
from src.data.splitter import split_manifest
from src.data.synthetic import SyntheticQosGenerator
from src.evaluation.experiment import (
    GRID_PRESETS,
    execute_experiment,
    prepare_split,
    score_model,
    sweep,
)
from src.models.experiment import ExperimentConfig, RahnConfig
from src.models.qos import EntityKind, MetadataTable, QosMatrix, SplitSpec
from src.models.reports import MetricReport, SweepResult, TrainingReport
from src.prediction.rahn_model import RahnModel
from src.reputation.rcm import compute_reputations, write_reputations
from src.utils.errors import CheckpointError, ConfigError, DataError
from src.utils.io import atomic_write_json
from src.utils.logger import get_logger

logger = get_logger("cli")

CHECKPOINT_NAME = "model.ckpt"
REPORT_NAME = "report.json"
EVALUATION_NAME = "evaluation.json"
REPUTATIONS_NAME = "reputations.csv"
SWEEP_NAME = "sweep.csv"
SWEEP_SUMMARY_NAME = "sweep_summary.json"
TIMING_NAME = "timing.json"

# Excluded from report files: reruns must produce byte-identical reports.
TIMING_FIELDS = {"wall_seconds"}

Inputs = Tuple[QosMatrix, Optional[MetadataTable], Optional[MetadataTable]]


def load_inputs(config: ExperimentConfig) -> Inputs:
    """Load the matrix and whichever metadata tables are configured."""
    paths = config.paths
    matrix = load_matrix(paths.matrix, format=paths.matrix_format)
    user_meta = (
        load_metadata(paths.user_metadata, EntityKind.USER, fmt=paths.metadata_format)
        if paths.user_metadata else None
    )
    service_meta = (
        load_metadata(paths.service_metadata, EntityKind.SERVICE, fmt=paths.metadata_format)
        if paths.service_metadata else None
    )
    return matrix, user_meta, service_meta


def _output_dir(config: ExperimentConfig) -> Path:
    out = Path(config.paths.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_reputation(config: ExperimentConfig) -> Path:
    """
    Compute reputations over the whole matrix and write ``reputations.csv``.

    Returns:
        Path of the CSV
    """
    matrix, _, _ = load_inputs(config)
    table = compute_reputations(matrix, config.rcm, seed=config.protocol.seed)
    return write_reputations(
        table,
        _output_dir(config) / REPUTATIONS_NAME,
        extra_summary={"config": config.echo(), "seed": config.protocol.seed},
    )


def cmd_train(config: ExperimentConfig, checkpoint: Optional[Union[str, Path]] = None) -> TrainingReport:
    """
    Train at the first configured density, save the checkpoint and ``report.json``.

    The report also carries the test metrics of the freshly trained model.
    The checkpoint is staged beside its destination and moved into place only
    after the report is written, so a failed report write leaves no checkpoint.
    """
    matrix, user_meta, service_meta = load_inputs(config)
    density = config.protocol.densities[0]
    outcome = execute_experiment(matrix, config, user_meta, service_meta, density=density)
    out = _output_dir(config)

    ckpt = Path(checkpoint) if checkpoint else out / CHECKPOINT_NAME
    staged = ckpt.with_name(ckpt.name + ".partial")
    try:
        outcome.model.save(staged, extra_config=config.echo())
        atomic_write_json(
            out / REPORT_NAME,
            {
                "config": config.echo(),
                "seed": config.protocol.seed,
                "npe_label": outcome.model.config.npe_label,
                "checkpoint": str(ckpt),
                "split": split_manifest(outcome.split, SplitSpec(density=density, seed=config.protocol.seed)),
                "training": outcome.training.model_dump(mode="json", exclude=TIMING_FIELDS),
                "metrics": outcome.metrics.model_dump(mode="json", exclude=TIMING_FIELDS),
            },
        )
        os.replace(staged, ckpt)
    finally:
        staged.unlink(missing_ok=True)
    atomic_write_json(
        out / TIMING_NAME,
        {"training_seconds": outcome.training.wall_seconds, "total_seconds": outcome.metrics.wall_seconds},
    )
    logger.info(f"Wrote checkpoint {ckpt} and {out / REPORT_NAME}")
    return outcome.training


def cmd_evaluate(config: ExperimentConfig, checkpoint: Optional[Union[str, Path]] = None) -> MetricReport:
    """
    Score a saved model with the full protocol at the first configured density.

    Raises:
        DataError: If the checkpoint file does not exist
        CheckpointError: If the checkpoint disagrees with the configuration
            (d, N, PE) or does not cover the matrix's entities
    """
    out = Path(config.paths.output_dir)
    ckpt = Path(checkpoint) if checkpoint else out / CHECKPOINT_NAME
    if not ckpt.is_file():
        raise DataError(f"checkpoint not found: {ckpt}")
    expected = RahnConfig.from_experiment(config)
    model = RahnModel.load(ckpt, expected=expected)

    matrix, user_meta, service_meta = load_inputs(config)
    if model.n_users < matrix.n_users or model.n_services < matrix.n_services:
        raise CheckpointError(
            f"checkpoint covers {model.n_users}x{model.n_services} entities, "
            f"matrix is {matrix.n_users}x{matrix.n_services}"
        )
    for meta, size in ((user_meta, model.n_user_regions), (service_meta, model.n_service_regions)):
        if meta is not None and meta.vocab_size > size:
            raise CheckpointError(
                f"{meta.kind.value} region vocabulary has {meta.vocab_size} entries, checkpoint {size}"
            )

    density = config.protocol.densities[0]
    split, reputations = prepare_split(matrix, config, density)
    report = score_model(model, split, reputations, config, density, user_meta, service_meta)
    atomic_write_json(
        _output_dir(config) / EVALUATION_NAME,
        {"checkpoint": str(ckpt), "metrics": report.model_dump(mode="json", exclude=TIMING_FIELDS)},
    )
    print(report.table_row())
    return report


def load_grid(grid_path: Optional[Union[str, Path]] = None, preset: Optional[str] = None) -> Dict[str, Any]:
    """
    Sweep grid from a JSON file or a named preset.

    Raises:
        ConfigError: If neither or both are given, the preset is unknown or
            the file is not a JSON object
        DataError: If the file cannot be read
    """
    if (grid_path is None) == (preset is None):
        raise ConfigError("sweep needs exactly one of --grid or --grid-preset")
    if preset is not None:
        if preset not in GRID_PRESETS:
            raise ConfigError(f"unknown grid preset '{preset}', choose from {sorted(GRID_PRESETS)}")
        return dict(GRID_PRESETS[preset])
    try:
        grid = json.loads(Path(grid_path).read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"cannot read grid file {grid_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"grid file {grid_path} is not valid JSON: {e}") from e
    if not isinstance(grid, dict):
        raise ConfigError("grid file must hold a JSON object")
    return grid


def cmd_sweep(config: ExperimentConfig, grid: Mapping[str, Sequence[Any]]) -> SweepResult:
    """Run the sweep; write ``sweep.csv`` and a JSON summary with failures and trend checks."""
    matrix, user_meta, service_meta = load_inputs(config)
    out = _output_dir(config)
    result = sweep(matrix, config, grid, user_meta, service_meta, output_path=out / SWEEP_NAME)
    atomic_write_json(
        out / SWEEP_SUMMARY_NAME,
        {
            "config": config.echo(),
            "grid": {k: list(v) for k, v in grid.items()},
            "n_cells": len(result.cells),
            "n_failed": result.n_failed,
            "failed_cells": [
                {"cell_index": c.cell_index, "npe_label": c.npe_label, "density": c.density, "error": c.error}
                for c in result.cells if c.failed
            ],
            "trend_checks": result.trend_checks,
        },
    )
    return result


def cmd_gen_fixture(
    out_dir: Union[str, Path],
    n_users: int = 50,
    n_services: int = 100,
    rank: int = 3,
    noise_std: float = 0.05,
    density: float = 0.2,
    n_regions: int = 4,
    seed: int = 42,
) -> Path:
    """Write a seeded synthetic fixture (matrix plus region tables)."""
    generator = SyntheticQosGenerator(
        n_users=n_users,
        n_services=n_services,
        rank=rank,
        noise_std=noise_std,
        density=density,
        n_regions=n_regions,
        seed=seed,
    )
    out = generator.write(out_dir)
    logger.info(f"Wrote {n_users}x{n_services} fixture (seed {seed}) to {out}")
    return out
