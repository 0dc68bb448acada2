"""
Matrix-density experiment protocol and parameter sweeps.

One experiment: split the observed entries at a density, compute reputations
from the training part only, train the network, predict every test entry,
drop the most anomalous test entries and score what remains. A sweep runs
that protocol over a grid of (N, PE, d, density) cells.
"""

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.data.outliers import filter_outliers
from src.data.splitter import make_rng, split_by_density
from src.evaluation.baselines import baseline_fit_predict
from src.evaluation.metrics import residual_metrics
from src.models.experiment import ExperimentConfig, ModelConfig, RahnConfig
from src.models.qos import MetadataTable, QosMatrix, Split, SplitSpec
from src.models.reports import MetricReport, SweepCellResult, SweepResult, TrainingReport
from src.models.reputation import ReputationTable
from src.prediction.rahn_model import RahnModel
from src.prediction.trainer import RahnTrainer, build_batch, build_model
from src.reputation.rcm import compute_reputations
from src.utils.errors import ConfigError, RahnError, StageError
from src.utils.io import atomic_write_csv
from src.utils.logger import get_logger

logger = get_logger("evaluation")

# Published RAHN response-time accuracy (MAE, RMSE) per matrix density.
PUBLISHED_RESPONSE_TIME_TARGETS: Dict[float, Tuple[float, float]] = {
    0.02: (0.156, 0.366),
    0.04: (0.134, 0.348),
    0.06: (0.125, 0.343),
    0.08: (0.118, 0.337),
    0.10: (0.115, 0.335),
}

GRID_KEYS = ("n_stack", "use_pe", "d", "densities")

GRID_PRESETS: Dict[str, Dict[str, List[Any]]] = {
    # Stack depth with and without position embeddings at d=08.
    "fig2": {"n_stack": [0, 1, 2], "use_pe": [False, True], "d": [8], "densities": [0.02, 0.04]},
    # Latent dimension against stack depth.
    "fig4": {"n_stack": [0, 1, 2], "use_pe": [False], "d": [8, 16, 32],
             "densities": [0.02, 0.04, 0.06, 0.08, 0.10]},
}

SWEEP_COLUMNS = ["npe_label", "density", "mae", "rmse", "n_test", "n_removed", "seed", "wall_seconds"]


def npe_label(n_stack: int, use_pe: bool, d: int) -> str:
    """"NPEd" run label: N and PE as one digit each, d as two digits."""
    return f"{int(n_stack)}{int(bool(use_pe))}{int(d):02d}"


def published_targets(density: float) -> Optional[Tuple[float, float]]:
    """Published (MAE, RMSE) at this density, if it is one of the reported ones."""
    for known, target in PUBLISHED_RESPONSE_TIME_TARGETS.items():
        if abs(known - density) < 1e-9:
            return target
    return None


def cell_seed(base_seed: int, cell_index: int) -> int:
    """Per-cell model seed derived from the base seed and the cell position."""
    state = np.random.SeedSequence((int(base_seed), int(cell_index))).generate_state(1, np.uint64)
    return int(state[0])


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Attribute any failure inside the block to a named pipeline stage."""
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error(f"Stage '{name}' failed: {e}")
        raise StageError(name, e) from e


@dataclass
class ExperimentOutcome:
    """Everything one protocol run produced."""

    metrics: MetricReport
    model: RahnModel
    split: Split
    reputations: ReputationTable
    training: Optional[TrainingReport] = None


def _holdout(train: QosMatrix, fraction: float, seed: int) -> Tuple[QosMatrix, Optional[QosMatrix]]:
    """Carve a seeded validation share off the training matrix."""
    n_val = int(np.floor(fraction * len(train)))
    if n_val <= 0 or n_val >= len(train):
        return train, None
    mask = np.ones(len(train), dtype=bool)
    mask[make_rng(seed).permutation(len(train))[:n_val]] = False
    return train.subset(mask), train.subset(~mask)


def prepare_split(
    matrix: QosMatrix, config: ExperimentConfig, density: float
) -> Tuple[Split, ReputationTable]:
    """Split at ``density`` with the protocol seed and compute train-only reputations."""
    seed = config.protocol.seed
    with stage("split"):
        split = split_by_density(matrix, SplitSpec(density=density, seed=seed))
    with stage("reputation"):
        reputations = compute_reputations(split.train, config.rcm, seed=seed)
    return split, reputations


def score_model(
    model: RahnModel,
    split: Split,
    reputations: ReputationTable,
    config: ExperimentConfig,
    density: float,
    user_meta: Optional[MetadataTable] = None,
    service_meta: Optional[MetadataTable] = None,
    started: Optional[float] = None,
) -> MetricReport:
    """Predict the test part, filter outliers and compute the metric report."""
    started = time.perf_counter() if started is None else started
    test = split.test

    with stage("predict"):
        predictions = model.predict(build_batch(test, reputations, user_meta, service_meta, with_targets=False))

    with stage("filter"):
        retained = filter_outliers(test, config.protocol.outlier_fraction, reference=split.train)
        # Both matrices are in row-major order, so linear keys are sorted.
        test_keys = test.users.astype(np.int64) * test.n_services + test.services
        kept_keys = retained.users.astype(np.int64) * retained.n_services + retained.services
        kept = np.searchsorted(test_keys, kept_keys)

    with stage("metrics"):
        mae, rmse = residual_metrics(predictions[kept] - retained.values)
        baseline = baseline_fit_predict(split.train, retained, "global-mean")
        baseline_mae, baseline_rmse = residual_metrics(baseline - retained.values)

    target = published_targets(density)
    report = MetricReport(
        mae=mae,
        rmse=rmse,
        n_test=len(retained),
        n_removed_outliers=len(test) - len(retained),
        npe_label=model.config.npe_label,
        density=density,
        seed=model.config.seed,
        baseline_mae=baseline_mae,
        baseline_rmse=baseline_rmse,
        published_mae=target[0] if target else None,
        published_rmse=target[1] if target else None,
        wall_seconds=time.perf_counter() - started,
        config=config.echo(),
    )
    logger.info(report.table_row())
    return report


def execute_experiment(
    matrix: QosMatrix,
    config: ExperimentConfig,
    user_meta: Optional[MetadataTable] = None,
    service_meta: Optional[MetadataTable] = None,
    density: Optional[float] = None,
    model_seed: Optional[int] = None,
) -> ExperimentOutcome:
    """
    Run the full protocol once and keep every intermediate product.

    Args:
        matrix: Full observation matrix
        config: Resolved experiment configuration
        user_meta: User region table (optional)
        service_meta: Service region table (optional)
        density: Matrix density (defaults to the first configured density)
        model_seed: Seed for initialization and batch order (defaults to the protocol seed)

    Raises:
        StageError: Naming the stage that failed
    """
    started = time.perf_counter()
    density = config.protocol.densities[0] if density is None else density
    split, reputations = prepare_split(matrix, config, density)

    with stage("train"):
        rahn = RahnConfig.from_experiment(config, seed=model_seed)
        model = build_model(rahn, matrix, user_meta, service_meta)
        fit_on, validation = _holdout(split.train, config.protocol.validation_fraction, rahn.seed)
        trainer = RahnTrainer(model, config.model)
        training = trainer.train(
            build_batch(fit_on, reputations, user_meta, service_meta),
            build_batch(validation, reputations, user_meta, service_meta) if validation is not None else None,
        )
        training.config["experiment"] = config.echo()

    metrics = score_model(model, split, reputations, config, density, user_meta, service_meta, started)
    return ExperimentOutcome(
        metrics=metrics, model=model, split=split, reputations=reputations, training=training
    )


def run_experiment(
    matrix: QosMatrix,
    config: ExperimentConfig,
    user_meta: Optional[MetadataTable] = None,
    service_meta: Optional[MetadataTable] = None,
    density: Optional[float] = None,
    model_seed: Optional[int] = None,
) -> MetricReport:
    """Run the protocol once and return its metric report."""
    return execute_experiment(matrix, config, user_meta, service_meta, density, model_seed).metrics


# Sweeps

def expand_grid(grid: Mapping[str, Sequence[Any]]) -> List[Tuple[int, bool, int, float]]:
    """
    Cartesian product of the grid in (n_stack, use_pe, d, density) order.

    Raises:
        ConfigError: On unknown keys or an empty grid
    """
    unknown = set(grid) - set(GRID_KEYS)
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    missing = [k for k in GRID_KEYS if not grid.get(k)]
    if missing:
        raise ConfigError(f"grid is empty along: {missing}")
    return [
        (int(n), bool(pe), int(d), float(md))
        for n, pe, d, md in itertools.product(
            grid["n_stack"], grid["use_pe"], grid["d"], grid["densities"]
        )
    ]


def cell_config(config: ExperimentConfig, n_stack: int, use_pe: bool, d: int) -> ExperimentConfig:
    """Experiment config with the cell's network settings applied and validated."""
    model = config.model.model_dump()
    model.update(
        n_stack=n_stack,
        use_pe=use_pe,
        d=d,
        token_dim=config.model.token_dim if d == config.model.d else None,
    )
    try:
        new_model = ModelConfig(**model)
    except ValueError as e:
        raise ConfigError(f"invalid sweep cell N={n_stack} PE={int(use_pe)} d={d}: {e}") from e
    return config.model_copy(update={"model": new_model})


def _run_cell(
    cell_index: int,
    cell: Tuple[int, bool, int, float],
    matrix: QosMatrix,
    config: ExperimentConfig,
    user_meta: Optional[MetadataTable],
    service_meta: Optional[MetadataTable],
) -> SweepCellResult:
    n_stack, use_pe, d, density = cell
    label = npe_label(n_stack, use_pe, d)
    try:
        report = run_experiment(
            matrix,
            cell_config(config, n_stack, use_pe, d),
            user_meta,
            service_meta,
            density=density,
            model_seed=cell_seed(config.protocol.seed, cell_index),
        )
        return SweepCellResult(cell_index=cell_index, npe_label=label, density=density, report=report)
    except (RahnError, ValueError, ArithmeticError) as e:
        logger.error(f"Sweep cell {cell_index} NPEd={label} MD={density:g} failed: {e}")
        return SweepCellResult(cell_index=cell_index, npe_label=label, density=density, error=str(e))


def trend_checks(cells: Sequence[SweepCellResult]) -> List[Dict[str, Any]]:
    """
    Whether MAE is non-increasing in N for every (PE, d, density) group.

    Reported alongside the sweep; single-seed trends are noisy and never gate.
    """
    groups: Dict[Tuple[bool, int, float], Dict[int, float]] = {}
    for cell in cells:
        if cell.report is None:
            continue
        n, pe, d = int(cell.npe_label[0]), cell.npe_label[1] == "1", int(cell.npe_label[2:])
        groups.setdefault((pe, d, cell.density), {})[n] = cell.report.mae

    checks = []
    for (pe, d, density), by_n in sorted(groups.items()):
        if len(by_n) < 2:
            continue
        ns = sorted(by_n)
        maes = [by_n[n] for n in ns]
        checks.append({
            "use_pe": pe,
            "d": d,
            "density": density,
            "n_stack": ns,
            "mae": maes,
            "non_increasing": all(b <= a for a, b in zip(maes, maes[1:])),
        })
    return checks


def sweep_frame(result: SweepResult) -> pd.DataFrame:
    """Long-format rows of the successful cells, in cell order."""
    rows = [
        {
            "npe_label": c.npe_label,
            "density": c.density,
            "mae": c.report.mae,
            "rmse": c.report.rmse,
            "n_test": c.report.n_test,
            "n_removed": c.report.n_removed_outliers,
            "seed": c.report.seed,
            "wall_seconds": c.report.wall_seconds,
        }
        for c in result.cells
        if c.report is not None
    ]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def sweep(
    matrix: QosMatrix,
    config: ExperimentConfig,
    grid: Mapping[str, Sequence[Any]],
    user_meta: Optional[MetadataTable] = None,
    service_meta: Optional[MetadataTable] = None,
    output_path: Optional[Union[str, Path]] = None,
) -> SweepResult:
    """
    Run every grid cell; failed cells are recorded, not raised.

    Every cell shares the protocol seed for its split, so all cells of one
    density see the same train/test partition.

    Args:
        output_path: Where to write the long-format CSV, if anywhere

    Raises:
        ConfigError: If the grid is empty or malformed
    """
    cells = expand_grid(grid)
    workers = config.protocol.workers
    logger.info(f"Sweep over {len(cells)} cells with {workers} worker(s)")

    args = [(i, cell, matrix, config, user_meta, service_meta) for i, cell in enumerate(cells)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, *zip(*args)))
    else:
        results = [_run_cell(*a) for a in args]
    results.sort(key=lambda r: r.cell_index)

    result = SweepResult(cells=results, trend_checks=trend_checks(results))
    for check in result.trend_checks:
        status = "ok" if check["non_increasing"] else "not observed"
        logger.info(
            f"Trend MAE non-increasing in N (PE={int(check['use_pe'])}, d={check['d']:02d}, "
            f"MD={check['density']:g}): {status}"
        )
    if result.n_failed:
        logger.warning(f"{result.n_failed} of {len(cells)} sweep cells failed")

    if output_path is not None:
        atomic_write_csv(output_path, sweep_frame(result))
        logger.info(f"Wrote sweep results to {output_path}")
    return result
