"""
Synthetic QoS fixture generator.

Produces a seeded low-rank response-time matrix with region metadata so the
whole pipeline can be exercised without the WS-DREAM download. Users and
services are assigned to regions, and a region-pair latency offset is mixed
into the low-rank signal so region features carry information.
"""

from pathlib import Path
from typing import Tuple, Union

import numpy as np

from src.data.matrix_io import save_matrix, save_metadata
from src.data.splitter import make_rng
from src.models.qos import EntityKind, EntityMeta, MetadataTable, QosMatrix
from src.utils.errors import ConfigError
from src.utils.logger import get_logger

logger = get_logger("data.synthetic")


class SyntheticQosGenerator:
    """Generates seeded low-rank QoS matrices with region metadata."""

    def __init__(
        self,
        n_users: int = 50,
        n_services: int = 100,
        rank: int = 3,
        noise_std: float = 0.05,
        density: float = 0.2,
        n_regions: int = 4,
        seed: int = 42,
    ) -> None:
        """
        Initialize generator.

        Args:
            n_users: Matrix rows
            n_services: Matrix columns
            rank: Rank of the latent signal
            noise_std: Standard deviation of the additive Gaussian noise
            density: Share of cells that are observed
            n_regions: Distinct regions per side
            seed: Random seed for reproducibility
        """
        if min(n_users, n_services, rank, n_regions) < 1:
            raise ConfigError("fixture dimensions must be positive")
        if not 0.0 < density <= 1.0:
            raise ConfigError(f"fixture density {density} outside (0, 1]")
        if noise_std < 0:
            raise ConfigError("noise_std must be >= 0")

        self.n_users = n_users
        self.n_services = n_services
        self.rank = rank
        self.noise_std = noise_std
        self.density = density
        self.n_regions = n_regions
        self.seed = seed

    def generate(self) -> Tuple[QosMatrix, MetadataTable, MetadataTable]:
        """
        Generate a fixture.

        Returns:
            Tuple of (matrix, user metadata, service metadata)
        """
        rng = make_rng(self.seed)

        user_factors = rng.uniform(0.0, 1.0, size=(self.n_users, self.rank))
        service_factors = rng.uniform(0.0, 1.0, size=(self.n_services, self.rank))
        signal = user_factors @ service_factors.T / self.rank

        user_regions = rng.integers(0, self.n_regions, size=self.n_users)
        service_regions = rng.integers(0, self.n_regions, size=self.n_services)
        region_latency = rng.uniform(0.0, 0.3, size=(self.n_regions, self.n_regions))
        signal = signal + region_latency[user_regions][:, service_regions]

        noisy = signal + rng.normal(0.0, self.noise_std, size=signal.shape)
        values = np.clip(noisy, 0.0, None)

        observed = rng.random(size=values.shape) < self.density
        users, services = np.nonzero(observed)
        matrix = QosMatrix(
            n_users=self.n_users,
            n_services=self.n_services,
            users=users,
            services=services,
            values=values[users, services],
        )

        vocabulary = [""] + [f"R{r}" for r in range(self.n_regions)]
        user_meta = MetadataTable(
            kind=EntityKind.USER,
            entities=[
                EntityMeta(entity_index=i, region_index=int(r) + 1, kind=EntityKind.USER)
                for i, r in enumerate(user_regions)
            ],
            vocabulary=vocabulary,
        )
        service_meta = MetadataTable(
            kind=EntityKind.SERVICE,
            entities=[
                EntityMeta(entity_index=i, region_index=int(r) + 1, kind=EntityKind.SERVICE)
                for i, r in enumerate(service_regions)
            ],
            vocabulary=vocabulary,
        )

        logger.info(
            f"Generated synthetic fixture {self.n_users}x{self.n_services} "
            f"(rank {self.rank}, noise {self.noise_std}, {len(matrix)} observed, seed {self.seed})"
        )
        return matrix, user_meta, service_meta

    def write(self, out_dir: Union[str, Path]) -> Path:
        """
        Generate and write ``rtMatrix.txt``, ``userlist.csv`` and ``wslist.csv``.

        Returns:
            The output directory
        """
        out = Path(out_dir)
        matrix, user_meta, service_meta = self.generate()
        save_matrix(matrix, out / "rtMatrix.txt", format="matrix-text")
        save_metadata(user_meta, out / "userlist.csv")
        save_metadata(service_meta, out / "wslist.csv")
        return out


def generate_fixture(
    n_users: int = 50,
    n_services: int = 100,
    rank: int = 3,
    noise_std: float = 0.05,
    density: float = 0.2,
    n_regions: int = 4,
    seed: int = 42,
) -> Tuple[QosMatrix, MetadataTable, MetadataTable]:
    """Convenience wrapper around SyntheticQosGenerator.generate()."""
    return SyntheticQosGenerator(
        n_users=n_users,
        n_services=n_services,
        rank=rank,
        noise_std=noise_std,
        density=density,
        n_regions=n_regions,
        seed=seed,
    ).generate()
