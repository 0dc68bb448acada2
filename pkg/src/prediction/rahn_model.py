"""
Reputation-aware hourglass network for QoS prediction.

Pipeline for one (user, service) pair:

    L0 = [uRE | uID | uRG | sRE | sID | sRG]         widths d/4 d/4 d/2 d/4 d/4 d/2
    L(k) = QPHN_k(L(k-1)), k = 1..n_stack             width 2d throughout
    y = f3(ReLU(f2(ReLU(f1(L(n))))))                  2d -> d -> d/2 -> 1

Each QPHN block squeezes its input through widths 2d, d, d/2 and expands back
to d, 2d; every one of those five scales passes through a self-attention
encoder and the five encoder outputs are concatenated (13d/2) and mapped back
to 2d. With n_stack = 0 the head reads L0 directly.

All computation is batched: a batch of B samples flows as (B, width) tensors.
"""

from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from src.models.experiment import RahnConfig
from src.models.samples import SampleBatch, TrainSample
from src.tensor import (
    Tensor,
    abs_,
    add,
    concat,
    embedding,
    linear,
    load_checkpoint,
    matmul,
    mean,
    mul,
    no_grad,
    relu,
    reshape,
    save_checkpoint,
    softmax_rows,
    square,
    sub,
    sum_,
    transpose_last,
)
from src.utils.errors import CheckpointError, ConfigError, ShapeError
from src.utils.logger import get_logger

logger = get_logger("prediction.model")

EMBEDDING_INIT_RANGE = 0.01
PREDICT_CHUNK = 4096


def _uniform(rng: np.random.Generator, bound: float, shape: Sequence[int], name: str) -> Tensor:
    return Tensor(rng.uniform(-bound, bound, size=tuple(shape)), requires_grad=True, name=name)


class Linear:
    """Affine map x . W + b with W of shape (fan_in, fan_out)."""

    def __init__(self, name: str, fan_in: int, fan_out: int, rng: np.random.Generator) -> None:
        bound = np.sqrt(1.0 / fan_in)
        self.weight = _uniform(rng, bound, (fan_in, fan_out), f"{name}.weight")
        self.bias = _uniform(rng, bound, (fan_out,), f"{name}.bias")

    def __call__(self, x: Tensor) -> Tensor:
        return linear(x, self.weight, self.bias)

    def parameters(self) -> List[Tensor]:
        return [self.weight, self.bias]


class Encoder:
    """
    Single-head self-attention over the tokens of one scale.

    The width-L input is cut into L / token_dim tokens; attention output is
    added back onto the tokens and the result flattened, so width is kept.
    """

    def __init__(
        self,
        name: str,
        width: int,
        token_dim: int,
        use_pe: bool,
        rng: np.random.Generator,
    ) -> None:
        if width % token_dim != 0:
            raise ShapeError(f"token_dim {token_dim} does not divide encoder width {width}")
        self.width = width
        self.token_dim = token_dim
        self.n_tokens = width // token_dim
        bound = np.sqrt(1.0 / token_dim)
        self.w_q = _uniform(rng, bound, (token_dim, token_dim), f"{name}.w_q")
        self.w_k = _uniform(rng, bound, (token_dim, token_dim), f"{name}.w_k")
        self.w_v = _uniform(rng, bound, (token_dim, token_dim), f"{name}.w_v")
        self.pos: Optional[Tensor] = None
        if use_pe:
            self.pos = _uniform(rng, EMBEDDING_INIT_RANGE, (self.n_tokens, token_dim), f"{name}.pos")

    def __call__(self, x: Tensor) -> Tensor:
        return encoder_forward(self, x)

    def parameters(self) -> List[Tensor]:
        params = [self.w_q, self.w_k, self.w_v]
        if self.pos is not None:
            params.append(self.pos)
        return params


def encoder_forward(enc: Encoder, x: Tensor) -> Tensor:
    """
    Attention encoder at one scale: (B, L) -> (B, L).

    Raises:
        ShapeError: If token_dim does not divide L
    """
    width = x.shape[-1]
    if width % enc.token_dim != 0:
        raise ShapeError(f"token_dim {enc.token_dim} does not divide input width {width}")
    if width != enc.width:
        raise ShapeError(f"encoder built for width {enc.width}, got {width}")
    lead = x.shape[:-1]
    tokens = reshape(x, lead + (enc.n_tokens, enc.token_dim))
    if enc.pos is not None:
        tokens = add(tokens, enc.pos)

    q = matmul(tokens, enc.w_q)
    k = matmul(tokens, enc.w_k)
    v = matmul(tokens, enc.w_v)
    scores = mul(matmul(q, transpose_last(k)), 1.0 / np.sqrt(enc.token_dim))
    attended = matmul(softmax_rows(scores), v)
    return reshape(add(tokens, attended), x.shape)


class QphnBlock:
    """One hourglass block: five scales, five encoders, one output map."""

    def __init__(self, name: str, d: int, token_dim: int, use_pe: bool, rng: np.random.Generator) -> None:
        self.d = d
        self.widths = (2 * d, d, d // 2, d, 2 * d)
        self.g = [
            Linear(f"{name}.g{k + 1}", self.widths[k], self.widths[k + 1], rng)
            for k in range(4)
        ]
        self.encoders = [
            Encoder(f"{name}.enc{i + 1}", w, token_dim, use_pe, rng)
            for i, w in enumerate(self.widths)
        ]
        self.out = Linear(f"{name}.out", sum(self.widths), 2 * d, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return qphn_layer(self, x)

    def parameters(self) -> List[Tensor]:
        params: List[Tensor] = []
        for g in self.g:
            params.extend(g.parameters())
        for enc in self.encoders:
            params.extend(enc.parameters())
        params.extend(self.out.parameters())
        return params


def qphn_layer(block: QphnBlock, prev: Tensor) -> Tensor:
    """
    One stack pass: (B, 2d) -> (B, 2d).

    Raises:
        ShapeError: If the input width is not 2d
    """
    if prev.shape[-1] != 2 * block.d:
        raise ShapeError(f"QPHN input width {prev.shape[-1]}, expected {2 * block.d}")
    scales = [prev]
    for g in block.g:
        scales.append(relu(g(scales[-1])))
    encoded = [enc(s) for enc, s in zip(block.encoders, scales)]
    return block.out(concat(encoded, batched=True))


class RahnModel:
    """
    Parameter container and forward pass.

    Parameters are created in a fixed order from one seeded generator, so a
    (config, vocabulary sizes) pair always yields the same initial network.
    """

    def __init__(
        self,
        config: RahnConfig,
        n_users: int,
        n_services: int,
        n_user_regions: int = 1,
        n_service_regions: int = 1,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        if min(n_users, n_services, n_user_regions, n_service_regions) < 1:
            raise ConfigError("every embedding vocabulary needs at least one row")
        self.config = config
        self.n_users = n_users
        self.n_services = n_services
        self.n_user_regions = n_user_regions
        self.n_service_regions = n_service_regions

        d = config.d
        t = config.resolved_token_dim
        rng = rng if rng is not None else np.random.Generator(np.random.PCG64(config.seed))

        self.user_rep = Linear("lfem.user_rep", 1, d // 4, rng)
        self.user_id = _uniform(rng, EMBEDDING_INIT_RANGE, (n_users, d // 4), "lfem.user_id")
        self.user_region = _uniform(rng, EMBEDDING_INIT_RANGE, (n_user_regions, d // 2), "lfem.user_region")
        self.service_rep = Linear("lfem.service_rep", 1, d // 4, rng)
        self.service_id = _uniform(rng, EMBEDDING_INIT_RANGE, (n_services, d // 4), "lfem.service_id")
        self.service_region = _uniform(
            rng, EMBEDDING_INIT_RANGE, (n_service_regions, d // 2), "lfem.service_region"
        )

        self.stacks = [QphnBlock(f"stack{i + 1}", d, t, config.use_pe, rng) for i in range(config.n_stack)]

        self.head = [
            Linear("head.fc1", 2 * d, d, rng),
            Linear("head.fc2", d, d // 2, rng),
            Linear("head.fc3", d // 2, 1, rng),
        ]

        logger.debug(
            f"RahnModel NPEd={config.npe_label}: {self.parameter_count()} parameters "
            f"({n_users} users, {n_services} services)"
        )

    # Parameter bookkeeping

    def parameters(self) -> "OrderedDict[str, Tensor]":
        """Every trainable tensor by name, in checkpoint order."""
        tensors: List[Tensor] = []
        tensors.extend(self.user_rep.parameters())
        tensors.extend([self.user_id, self.user_region])
        tensors.extend(self.service_rep.parameters())
        tensors.extend([self.service_id, self.service_region])
        for block in self.stacks:
            tensors.extend(block.parameters())
        for layer in self.head:
            tensors.extend(layer.parameters())
        return OrderedDict((p.name, p) for p in tensors)

    def regularized(self) -> List[Tensor]:
        """Weight matrices and embedding tables; biases are excluded."""
        return [p for name, p in self.parameters().items() if not name.endswith(".bias")]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, p.data.copy()) for name, p in self.parameters().items())

    def load_state_dict(self, arrays: Dict[str, np.ndarray]) -> None:
        """
        Copy values into the parameters.

        Raises:
            CheckpointError: If names or shapes do not match exactly
        """
        params = self.parameters()
        missing = [n for n in params if n not in arrays]
        unexpected = [n for n in arrays if n not in params]
        if missing or unexpected:
            raise CheckpointError(
                f"parameter names differ: missing {missing[:5]}, unexpected {unexpected[:5]}"
            )
        for name, p in params.items():
            if arrays[name].shape != p.shape:
                raise CheckpointError(
                    f"parameter '{name}' has shape {arrays[name].shape}, expected {p.shape}"
                )
        for name, p in params.items():
            p.data = np.array(arrays[name], dtype=np.float64)
            p.grad = None

    # Forward pass

    def _lfem_parts(self, batch: SampleBatch) -> List[Tensor]:
        return [
            self.user_rep(Tensor(batch.user_reputation.reshape(-1, 1))),
            embedding(self.user_id, batch.user_index),
            embedding(self.user_region, batch.user_region),
            self.service_rep(Tensor(batch.service_reputation.reshape(-1, 1))),
            embedding(self.service_id, batch.service_index),
            embedding(self.service_region, batch.service_region),
        ]

    def lfem_forward_batch(self, batch: SampleBatch) -> Tensor:
        """Initial latent features L0: (B, 2d)."""
        return concat(self._lfem_parts(batch), batched=True)

    def forward_batch(self, batch: SampleBatch) -> Tensor:
        """Predictions for a batch: (B, 1)."""
        h = self.lfem_forward_batch(batch)
        for block in self.stacks:
            h = block(h)
        fc1, fc2, fc3 = self.head
        return fc3(relu(fc2(relu(fc1(h)))))

    def lfem_forward(self, sample: Union[TrainSample, SampleBatch]) -> Tensor:
        """
        L0 of one sample: (1, 2d).

        Raises:
            ShapeError: If given a batch holding more than one sample
        """
        batch = sample if isinstance(sample, SampleBatch) else SampleBatch.from_samples([sample])
        return concat(self._lfem_parts(batch))

    def forward(self, sample: TrainSample) -> Tensor:
        """Prediction of one sample as a 0-d tensor."""
        return reshape(self.forward_batch(SampleBatch.from_samples([sample])), ())

    def loss_batch(self, batch: SampleBatch, lambda_reg: Optional[float] = None) -> Tensor:
        """
        J = mean |pred - target| + lambda * sum of squared weights.

        Raises:
            ConfigError: If the batch is empty
            ShapeError: If the batch carries no targets
        """
        if len(batch) == 0:
            raise ConfigError("loss needs a non-empty batch")
        if batch.target is None:
            raise ShapeError("loss needs target values")
        lam = self.config.lambda_reg if lambda_reg is None else lambda_reg
        pred = self.forward_batch(batch)
        data_term = mean(abs_(sub(pred, Tensor(batch.target.reshape(-1, 1)))))
        if lam == 0.0:
            return data_term
        return add(data_term, mul(self.regularization(), lam))

    def loss(self, samples: Sequence[TrainSample], lambda_reg: Optional[float] = None) -> Tensor:
        """Per-sample form of loss_batch."""
        if len(samples) == 0:
            raise ConfigError("loss needs a non-empty batch")
        return self.loss_batch(SampleBatch.from_samples(list(samples)), lambda_reg)

    def regularization(self) -> Tensor:
        """Sum of squared entries of every regularized tensor."""
        terms = [sum_(square(p)) for p in self.regularized()]
        total = terms[0]
        for term in terms[1:]:
            total = add(total, term)
        return total

    def predict(self, batch: Union[SampleBatch, Sequence[TrainSample]]) -> np.ndarray:
        """Predicted QoS per sample, evaluated in chunks without graph recording."""
        if not isinstance(batch, SampleBatch):
            batch = SampleBatch.from_samples(list(batch))
        out = np.empty(len(batch), dtype=np.float64)
        with no_grad():
            for start in range(0, len(batch), PREDICT_CHUNK):
                idx = np.arange(start, min(start + PREDICT_CHUNK, len(batch)))
                out[idx] = self.forward_batch(batch.take(idx)).data.reshape(-1)
        return out

    # Persistence

    def architecture(self) -> Dict[str, object]:
        """What a checkpoint must agree on to be loaded into this model."""
        return {
            "d": self.config.d,
            "n_stack": self.config.n_stack,
            "use_pe": self.config.use_pe,
            "token_dim": self.config.resolved_token_dim,
            "n_users": self.n_users,
            "n_services": self.n_services,
            "n_user_regions": self.n_user_regions,
            "n_service_regions": self.n_service_regions,
        }

    def save(self, path: Union[str, Path], extra_config: Optional[Dict[str, object]] = None) -> Path:
        config = {"architecture": self.architecture(), "rahn": self.config.model_dump(mode="json")}
        if extra_config:
            config["experiment"] = extra_config
        return save_checkpoint(path, self.parameters(), config)

    @classmethod
    def load(cls, path: Union[str, Path], expected: Optional[RahnConfig] = None) -> "RahnModel":
        """
        Rebuild a model from a checkpoint.

        Raises:
            CheckpointError: If the file is invalid or disagrees with ``expected``
                on d, n_stack or use_pe
        """
        header, arrays = load_checkpoint(path)
        try:
            arch = header["config"]["architecture"]
            config = RahnConfig(**header["config"]["rahn"])
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError(f"{path}: checkpoint config is incomplete: {e}") from e

        if expected is not None:
            for key in ("d", "n_stack", "use_pe"):
                if getattr(expected, key) != getattr(config, key):
                    raise CheckpointError(
                        f"checkpoint has {key}={getattr(config, key)}, "
                        f"configuration asks for {getattr(expected, key)}"
                    )
        model = cls(
            config,
            n_users=int(arch["n_users"]),
            n_services=int(arch["n_services"]),
            n_user_regions=int(arch["n_user_regions"]),
            n_service_regions=int(arch["n_service_regions"]),
        )
        model.load_state_dict(arrays)
        logger.info(f"Loaded NPEd={config.npe_label} model from {path}")
        return model


def lfem_forward(model: RahnModel, sample: TrainSample) -> Tensor:
    return model.lfem_forward(sample)


def forward(model: RahnModel, sample: TrainSample) -> Tensor:
    return model.forward(sample)


def loss(model: RahnModel, batch: Sequence[TrainSample], lambda_reg: float) -> Tensor:
    return model.loss(batch, lambda_reg)
