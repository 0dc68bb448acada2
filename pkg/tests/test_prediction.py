"""
Tests for the hourglass network, its loss and the trainer.
"""

import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from src.data import generate_fixture
from src.models.experiment import ModelConfig, RahnConfig
from src.models.samples import SampleBatch, TrainSample
from src.prediction import RahnModel, RahnTrainer, build_batch, build_model
from src.prediction.rahn_model import Encoder, QphnBlock, encoder_forward, qphn_layer
from src.tensor import Tensor
from src.utils.errors import CheckpointError, ConfigError, DivergenceError, IndexLookupError, ShapeError

H = 1e-5


def _samples(n_users=3, n_services=4, n=5, seed=0):
    rng = np.random.default_rng(seed)
    return [
        TrainSample(
            user_index=int(rng.integers(n_users)),
            service_index=int(rng.integers(n_services)),
            user_region=int(rng.integers(2)),
            service_region=int(rng.integers(2)),
            user_reputation=float(rng.uniform()),
            service_reputation=float(rng.uniform()),
            target_qos=float(rng.uniform(0.1, 2.0)),
        )
        for _ in range(n)
    ]


def _model(n_stack=1, use_pe=False, d=4, lambda_reg=0.0, seed=3):
    config = RahnConfig(d=d, n_stack=n_stack, use_pe=use_pe, lambda_reg=lambda_reg, seed=seed)
    return RahnModel(config, n_users=3, n_services=4, n_user_regions=2, n_service_regions=2)


class TestShapes:
    """Widths through the network."""

    @pytest.mark.parametrize("d", [4, 8, 16, 32])
    def test_hourglass_widths(self, d):
        block = QphnBlock("b", d, d // 4, False, np.random.default_rng(0))

        assert block.widths == (2 * d, d, d // 2, d, 2 * d)
        assert block.out.weight.shape == (13 * d // 2, 2 * d)
        out = qphn_layer(block, Tensor(np.ones((3, 2 * d))))
        assert out.shape == (3, 2 * d)

    @pytest.mark.parametrize("n_stack", [0, 1, 2])
    def test_forward_shapes(self, n_stack):
        model = _model(n_stack=n_stack, d=8)
        sample = _samples()[0]

        assert model.lfem_forward(sample).shape == (1, 16)
        assert model.forward(sample).shape == ()
        assert model.forward_batch(SampleBatch.from_samples(_samples())).shape == (5, 1)

    def test_block_rejects_wrong_width(self):
        block = QphnBlock("b", 8, 2, False, np.random.default_rng(0))

        with pytest.raises(ShapeError):
            qphn_layer(block, Tensor(np.ones((1, 8))))

    def test_token_dim_must_divide(self):
        with pytest.raises(ShapeError):
            Encoder("e", 6, 4, False, np.random.default_rng(0))

    def test_config_rejects_d_not_divisible_by_four(self):
        with pytest.raises(PydanticValidationError):
            RahnConfig(d=6)

    def test_position_embeddings_add_one_width_per_scale(self):
        without = _model(n_stack=2, use_pe=False, d=8).parameter_count()
        with_pe = _model(n_stack=2, use_pe=True, d=8).parameter_count()

        assert with_pe - without == 2 * 13 * 8 // 2

    def test_regularized_excludes_biases(self):
        model = _model()

        names = {p.name for p in model.regularized()}

        assert "head.fc1.weight" in names
        assert "lfem.user_id" in names
        assert not any(n.endswith(".bias") for n in names)


class TestEncoder:
    """Self-attention encoder at one scale."""

    def test_zero_query_key_averages_values(self):
        enc = Encoder("e", 6, 2, False, np.random.default_rng(0))
        enc.w_q.data[:] = 0.0
        enc.w_k.data[:] = 0.0
        x = np.arange(6.0).reshape(1, 6)

        out = encoder_forward(enc, Tensor(x)).data

        tokens = x.reshape(3, 2)
        expected = tokens + (tokens @ enc.w_v.data).mean(axis=0)
        np.testing.assert_allclose(out, expected.reshape(1, 6))

    def test_single_token_is_value_residual(self):
        enc = Encoder("e", 2, 2, False, np.random.default_rng(1))
        x = np.array([[0.5, -1.0]])

        out = encoder_forward(enc, Tensor(x)).data

        np.testing.assert_allclose(out, x + x @ enc.w_v.data)

    def test_position_embedding_is_added_to_tokens(self):
        enc = Encoder("e", 4, 2, True, np.random.default_rng(2))
        for w in (enc.w_q, enc.w_k, enc.w_v):
            w.data[:] = 0.0

        out = encoder_forward(enc, Tensor(np.zeros((1, 4)))).data

        np.testing.assert_allclose(out, enc.pos.data.reshape(1, 4))


class TestForward:
    """Feature extraction and prediction."""

    def test_zero_parameters_give_zero_output(self):
        model = _model(n_stack=1, d=8)
        for p in model.parameters().values():
            p.data[:] = 0.0

        assert model.forward(_samples()[0]).item() == 0.0

    def test_reputation_enters_its_slot(self):
        model = _model(d=8)
        low = TrainSample(user_index=0, service_index=0, user_reputation=0.1)
        high = TrainSample(user_index=0, service_index=0, user_reputation=0.9)

        diff = model.lfem_forward(high).data - model.lfem_forward(low).data

        assert np.any(diff[0, :2] != 0)
        np.testing.assert_array_equal(diff[0, 2:], 0.0)

    def test_user_id_changes_only_its_slice(self):
        model = _model(d=8)
        a = TrainSample(user_index=0, service_index=1, user_reputation=0.4)
        b = TrainSample(user_index=2, service_index=1, user_reputation=0.4)

        diff = model.lfem_forward(b).data - model.lfem_forward(a).data

        # d=8 layout: rep 0:2, id 2:4, region 4:8, then the service half
        assert np.any(diff[0, 2:4] != 0)
        np.testing.assert_array_equal(diff[0, :2], 0.0)
        np.testing.assert_array_equal(diff[0, 4:], 0.0)

    def test_single_sample_features_reject_a_batch(self):
        model = _model(d=8)

        with pytest.raises(ShapeError):
            model.lfem_forward(SampleBatch.from_samples(_samples(n=2)))

    def test_single_sample_features_accept_one_row_batch(self):
        model = _model(d=8)
        sample = _samples()[0]

        np.testing.assert_array_equal(
            model.lfem_forward(SampleBatch.from_samples([sample])).data,
            model.lfem_forward(sample).data,
        )

    def test_unknown_user_index(self):
        model = _model()

        with pytest.raises(IndexLookupError):
            model.forward(TrainSample(user_index=3, service_index=0))

    def test_sample_rejects_reputation_out_of_range(self):
        with pytest.raises(PydanticValidationError):
            TrainSample(user_index=0, service_index=0, user_reputation=1.5)

    def test_predict_matches_forward(self):
        model = _model(n_stack=2, d=8)
        samples = _samples()

        predicted = model.predict(samples)

        expected = [model.forward(s).item() for s in samples]
        np.testing.assert_allclose(predicted, expected)


class TestLoss:
    """Objective J."""

    def test_data_term_is_mean_absolute_error(self):
        model = _model()
        samples = _samples()
        batch = SampleBatch.from_samples(samples)

        value = model.loss(samples, 0.0).item()

        assert value == pytest.approx(np.mean(np.abs(model.predict(batch) - batch.target)))

    def test_regularization_term(self):
        model = _model()
        samples = _samples()
        squares = sum(float(np.sum(p.data ** 2)) for p in model.regularized())

        with_reg = model.loss(samples, 0.5).item()
        without = model.loss(samples, 0.0).item()

        assert with_reg - without == pytest.approx(0.5 * squares)

    def test_empty_batch(self):
        with pytest.raises(ConfigError):
            _model().loss([], 0.1)

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("n_stack,use_pe", [(0, False), (0, True), (1, False), (1, True)])
    def test_gradients_match_finite_differences(self, n_stack, use_pe, seed):
        model = _model(n_stack=n_stack, use_pe=use_pe, lambda_reg=0.01, seed=seed)
        samples = _samples(n=4, seed=seed)

        def objective():
            return model.loss(samples)

        model.zero_grad()
        objective().backward()
        for name, p in model.parameters().items():
            analytic = p.grad
            assert analytic is not None, name
            numeric = np.zeros_like(p.data)
            it = np.nditer(p.data, flags=["multi_index"])
            for _ in it:
                i = it.multi_index
                original = p.data[i]
                p.data[i] = original + H
                up = objective().item()
                p.data[i] = original - H
                down = objective().item()
                p.data[i] = original
                numeric[i] = (up - down) / (2 * H)
            np.testing.assert_allclose(analytic, numeric, atol=1e-6, rtol=1e-4, err_msg=name)


class TestTrainer:
    """Mini-batch Adam training."""

    @pytest.fixture
    def rank_one(self):
        matrix, user_meta, service_meta = generate_fixture(
            n_users=20, n_services=30, rank=1, noise_std=0.01, density=1.0, n_regions=2, seed=5
        )
        return matrix, user_meta, service_meta

    def _trainer(self, matrix, user_meta, service_meta, **settings):
        settings = {"d": 8, "n_stack": 1, "lambda_reg": 0.0, "batch_size": 32,
                    "epochs": 5, "learning_rate": 0.005, **settings}
        model_config = ModelConfig(**settings)
        config = RahnConfig(d=model_config.d, n_stack=model_config.n_stack,
                            lambda_reg=model_config.lambda_reg, seed=13)
        model = build_model(config, matrix, user_meta, service_meta)
        return RahnTrainer(model, model_config)

    def test_loss_halves_on_rank_one_matrix(self, rank_one):
        matrix, user_meta, service_meta = rank_one
        trainer = self._trainer(matrix, user_meta, service_meta, epochs=40)

        report = trainer.train(build_batch(matrix, None, user_meta, service_meta))

        assert len(report.epoch_losses) == 40
        assert report.epoch_losses[-1] < 0.5 * report.initial_loss

    def test_zero_learning_rate_keeps_loss(self, rank_one):
        matrix, user_meta, service_meta = rank_one
        trainer = self._trainer(matrix, user_meta, service_meta, learning_rate=0.0, epochs=3)
        before = trainer.model.state_dict()

        report = trainer.train(build_batch(matrix, None, user_meta, service_meta))

        for loss in report.epoch_losses:
            assert loss == pytest.approx(report.initial_loss, rel=1e-9)
        for name, values in trainer.model.state_dict().items():
            np.testing.assert_array_equal(values, before[name])

    def test_same_seed_same_run(self, rank_one):
        matrix, user_meta, service_meta = rank_one
        batch = build_batch(matrix, None, user_meta, service_meta)

        a = self._trainer(matrix, user_meta, service_meta, epochs=2)
        b = self._trainer(matrix, user_meta, service_meta, epochs=2)

        assert a.train(batch).epoch_losses == b.train(batch).epoch_losses
        for name, values in a.model.state_dict().items():
            np.testing.assert_array_equal(values, b.model.state_dict()[name])

    def test_divergence_reports_last_finite_loss(self, rank_one):
        matrix, user_meta, service_meta = rank_one
        trainer = self._trainer(matrix, user_meta, service_meta, n_stack=0, learning_rate=1e200)

        with pytest.raises(DivergenceError) as info:
            trainer.train(build_batch(matrix, None, user_meta, service_meta))

        assert np.isfinite(info.value.last_finite_loss)

    def test_empty_training_set(self, rank_one):
        matrix, user_meta, service_meta = rank_one
        trainer = self._trainer(matrix, user_meta, service_meta)

        with pytest.raises(ConfigError):
            trainer.train(build_batch(matrix, None, user_meta, service_meta).take(np.array([], dtype=np.int64)))


class TestPersistence:
    """Checkpoint save and load."""

    def test_round_trip_predictions(self, tmp_path):
        model = _model(n_stack=1, use_pe=True, d=8)
        samples = _samples()

        path = model.save(tmp_path / "model.ckpt")
        loaded = RahnModel.load(path, expected=model.config)

        np.testing.assert_array_equal(loaded.predict(samples), model.predict(samples))

    def test_architecture_mismatch(self, tmp_path):
        path = _model(n_stack=1).save(tmp_path / "model.ckpt")

        with pytest.raises(CheckpointError, match="n_stack"):
            RahnModel.load(path, expected=RahnConfig(d=4, n_stack=0))

    def test_state_dict_shape_mismatch(self):
        model = _model()
        state = model.state_dict()
        state["head.fc3.bias"] = np.zeros(2)

        with pytest.raises(CheckpointError):
            model.load_state_dict(state)
