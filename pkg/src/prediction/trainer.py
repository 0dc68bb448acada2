"""
Mini-batch training of the RAHN network with Adam.
"""

import time
from typing import List, Optional

import numpy as np

from src.models.experiment import ModelConfig, RahnConfig
from src.models.qos import EntityKind, MetadataTable, QosMatrix
from src.models.reports import TrainingReport
from src.models.reputation import ReputationTable
from src.models.samples import SampleBatch
from src.prediction.rahn_model import RahnModel
from src.reputation.rcm import NEUTRAL_REPUTATION
from src.tensor import AdamState, adam_step, backward, no_grad
from src.utils.errors import ConfigError, DivergenceError
from src.utils.logger import get_logger

logger = get_logger("prediction.trainer")


def _lookup(values: Optional[np.ndarray], idx: np.ndarray) -> np.ndarray:
    """Per-entity value at idx; entities past the end of ``values`` get the neutral default."""
    out = np.full(idx.size, NEUTRAL_REPUTATION, dtype=np.float64)
    if values is None:
        return out
    known = idx < values.size
    out[known] = values[idx[known]]
    return out


def build_batch(
    matrix: QosMatrix,
    reputations: Optional[ReputationTable] = None,
    user_meta: Optional[MetadataTable] = None,
    service_meta: Optional[MetadataTable] = None,
    with_targets: bool = True,
) -> SampleBatch:
    """
    Network inputs for every entry of ``matrix``.

    Missing reputations default to 0.5; missing metadata to region 0.
    """
    user_meta = user_meta or MetadataTable.unknown(EntityKind.USER)
    service_meta = service_meta or MetadataTable.unknown(EntityKind.SERVICE)
    user_regions = user_meta.region_array(matrix.n_users)
    service_regions = service_meta.region_array(matrix.n_services)
    return SampleBatch(
        user_index=matrix.users,
        service_index=matrix.services,
        user_region=user_regions[matrix.users],
        service_region=service_regions[matrix.services],
        user_reputation=_lookup(reputations.users.reputations if reputations else None, matrix.users),
        service_reputation=_lookup(
            reputations.services.reputations if reputations else None, matrix.services
        ),
        target=matrix.values if with_targets else None,
    )


def build_model(
    config: RahnConfig,
    matrix: QosMatrix,
    user_meta: Optional[MetadataTable] = None,
    service_meta: Optional[MetadataTable] = None,
) -> RahnModel:
    """Model sized for the matrix and the metadata vocabularies."""
    return RahnModel(
        config,
        n_users=max(matrix.n_users, 1),
        n_services=max(matrix.n_services, 1),
        n_user_regions=user_meta.vocab_size if user_meta else 1,
        n_service_regions=service_meta.vocab_size if service_meta else 1,
    )


class RahnTrainer:
    """
    Trains a RahnModel.

    Initialization and batch order draw from independent streams spawned
    from one seed, so a seed fixes the whole run.
    """

    def __init__(self, model: RahnModel, model_config: Optional[ModelConfig] = None) -> None:
        self.model = model
        self.settings = model_config or ModelConfig(
            d=model.config.d, n_stack=model.config.n_stack, use_pe=model.config.use_pe,
            token_dim=model.config.token_dim, lambda_reg=model.config.lambda_reg,
        )
        self.state = AdamState(
            learning_rate=self.settings.learning_rate,
            beta1=self.settings.adam_beta1,
            beta2=self.settings.adam_beta2,
            eps=self.settings.adam_eps,
        )
        self.rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(model.config.seed).spawn(1)[0])
        )

    def evaluate_loss(self, batch: SampleBatch) -> float:
        """Full-data objective J without recording gradients."""
        if len(batch) == 0:
            raise ConfigError("loss needs a non-empty batch")
        predictions = self.model.predict(batch)
        data_term = float(np.mean(np.abs(predictions - batch.target)))
        with no_grad():
            reg = self.model.regularization().item() if self.model.config.lambda_reg else 0.0
        return data_term + self.model.config.lambda_reg * reg

    def validation_mae(self, batch: SampleBatch) -> float:
        return float(np.mean(np.abs(self.model.predict(batch) - batch.target)))

    def train(
        self,
        train: SampleBatch,
        validation: Optional[SampleBatch] = None,
        epochs: Optional[int] = None,
    ) -> TrainingReport:
        """
        Run the configured number of epochs.

        Args:
            train: Training samples with targets
            validation: Optional held-out samples for per-epoch MAE
            epochs: Override for settings.epochs

        Returns:
            TrainingReport

        Raises:
            ConfigError: If there are no training samples
            DivergenceError: If a batch loss becomes non-finite
        """
        if len(train) == 0:
            raise ConfigError("cannot train on an empty matrix")
        epochs = self.settings.epochs if epochs is None else epochs
        batch_size = self.settings.batch_size
        params = self.model.parameters()
        started = time.perf_counter()

        initial_loss = self.evaluate_loss(train)
        last_finite = initial_loss
        epoch_losses: List[float] = []
        validation_mae: List[float] = []
        logger.info(
            f"Training NPEd={self.model.config.npe_label} on {len(train)} samples: "
            f"{epochs} epochs, batch {batch_size}, lr {self.state.learning_rate}, "
            f"initial loss {initial_loss:.6f}"
        )

        for epoch in range(1, epochs + 1):
            order = self.rng.permutation(len(train))
            weighted = 0.0
            for start in range(0, len(train), batch_size):
                idx = order[start:start + batch_size]
                loss = self.model.loss_batch(train.take(idx))
                value = loss.item()
                if not np.isfinite(value):
                    raise DivergenceError(
                        f"non-finite loss at epoch {epoch}, batch starting {start}",
                        last_finite_loss=last_finite,
                    )
                last_finite = value
                backward(loss)
                adam_step(params, self.state)
                weighted += value * idx.size

            epoch_loss = weighted / len(train)
            epoch_losses.append(epoch_loss)
            message = f"epoch {epoch}/{epochs}: loss {epoch_loss:.6f}"
            if validation is not None and len(validation) > 0:
                validation_mae.append(self.validation_mae(validation))
                message += f", validation MAE {validation_mae[-1]:.6f}"
            logger.info(message)

        wall = time.perf_counter() - started
        if epoch_losses:
            logger.info(f"Training finished in {wall:.1f}s, final loss {epoch_losses[-1]:.6f}")
        return TrainingReport(
            npe_label=self.model.config.npe_label,
            config={"rahn": self.model.config.model_dump(mode="json"),
                    "training": self.settings.model_dump(mode="json")},
            seed=self.model.config.seed,
            epoch_losses=epoch_losses,
            validation_mae=validation_mae,
            initial_loss=initial_loss,
            n_train=len(train),
            parameter_count=self.model.parameter_count(),
            wall_seconds=wall,
        )


def train(
    model: RahnModel,
    train_matrix: QosMatrix,
    reputations: Optional[ReputationTable],
    user_meta: Optional[MetadataTable],
    service_meta: Optional[MetadataTable],
    config: ModelConfig,
    validation_matrix: Optional[QosMatrix] = None,
) -> TrainingReport:
    """Matrix-level entry point: build the samples and run RahnTrainer."""
    train_batch = build_batch(train_matrix, reputations, user_meta, service_meta)
    validation = None
    if validation_matrix is not None and len(validation_matrix) > 0:
        validation = build_batch(validation_matrix, reputations, user_meta, service_meta)
    return RahnTrainer(model, config).train(train_batch, validation)


__all__ = ["RahnTrainer", "build_batch", "build_model", "train"]
