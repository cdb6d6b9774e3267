"""Network forward/backward, Adam, checkpoints, training determinism."""

import json
import struct

import numpy as np
import pytest

from hfe import (GradientSet, HFEConfig, LossFlags, batch_loss, forward,
                 init_model, load_checkpoint, new_train_state, save_checkpoint)
from hfe.errors import CheckpointError, NumericalError
from hfe.losses import MarginSet
from hfe.mining import mine_quintuplets, pairwise_distances
from hfe.model import (ADAM_EPS, CHECKPOINT_MAGIC, WEIGHT_DECAY, backward,
                       backward_and_step, forward_cached)
from hfe.rng import seeded_rng
from hfe.train import train_loop
from hfe.types import as_arrays
from hfe.data import SynthSpec, generate_synthetic

from instances import DEFAULT_MARGINS, pk_labels, random_model_instance, tiny_model_config
from oracles import central_difference, relative_error


def zeroed(model):
    for name in model.params:
        model.params[name][:] = 0.0
    return model


class TestForward:
    def test_zero_weights_give_half_probs_and_zero_embeddings(self):
        config = tiny_model_config()
        model = zeroed(init_model(config, seeded_rng(0)))
        embeddings, probs = forward(model, np.ones((3, 4)))
        assert np.array_equal(probs, np.full((3, 2), 0.5))
        for e in embeddings:
            assert np.array_equal(e, np.zeros((3, 4)))

    def test_hand_computed_single_layer(self):
        config = HFEConfig(num_attrs=1, feature_dim=2, hidden_dims=(2,), embed_dim=2)
        model = zeroed(init_model(config, seeded_rng(0)))
        model.params["backbone.0.W"][:] = np.eye(2)
        model.params["branch.0.embed.W"][:] = np.array([[1.0, 2.0], [0.5, -1.0]])
        model.params["branch.0.embed.b"][:] = np.array([0.1, 0.2])
        model.params["branch.0.cls.W"][:] = np.array([[1.0], [1.0]])
        model.params["branch.0.cls.b"][:] = np.array([-0.5])
        # x = [1, 2] -> h = relu([1, 2]) = [1, 2]
        # e = [1*1 + 2*0.5 + 0.1, 1*2 + 2*(-1) + 0.2] = [2.1, 0.2]
        # logit = 2.1 + 0.2 - 0.5 = 1.8
        embeddings, probs = forward(model, np.array([[1.0, 2.0]]))
        assert np.allclose(embeddings[0], [[2.1, 0.2]], atol=1e-15)
        assert abs(probs[0, 0] - 1.0 / (1.0 + np.exp(-1.8))) < 1e-15

    def test_relu_clamps_negative_preactivations(self):
        config = HFEConfig(num_attrs=1, feature_dim=1, hidden_dims=(1,), embed_dim=1)
        model = zeroed(init_model(config, seeded_rng(0)))
        model.params["backbone.0.W"][:] = np.array([[1.0]])
        model.params["branch.0.embed.W"][:] = np.array([[1.0]])
        embeddings, _ = forward(model, np.array([[-3.0], [2.0]]))
        assert np.array_equal(embeddings[0], np.array([[0.0], [2.0]]))

    def test_output_shapes(self):
        config = tiny_model_config()
        model = init_model(config, seeded_rng(1))
        embeddings, probs = forward(model, seeded_rng(2).standard_normal((8, 4)))
        assert probs.shape == (8, 2)
        assert len(embeddings) == 2 and all(e.shape == (8, 4) for e in embeddings)

    def test_shape_mismatch_rejected(self):
        model = init_model(tiny_model_config(), seeded_rng(1))
        with pytest.raises(ValueError):
            forward(model, np.zeros((2, 5)))


class TestInitModel:
    def test_same_seed_bit_identical(self):
        config = tiny_model_config()
        a = init_model(config, seeded_rng(3))
        b = init_model(config, seeded_rng(3))
        for name in a.params:
            assert np.array_equal(a.params[name], b.params[name])

    def test_different_seed_differs(self):
        config = tiny_model_config()
        a = init_model(config, seeded_rng(3))
        b = init_model(config, seeded_rng(4))
        assert any(not np.array_equal(a.params[n], b.params[n]) for n in a.params)

    def test_fan_in_bound_and_zero_biases(self):
        config = HFEConfig(num_attrs=3, feature_dim=9, hidden_dims=(16, 25), embed_dim=4)
        model = init_model(config, seeded_rng(5))
        for name, w in model.params.items():
            if name.endswith(".W"):
                assert np.max(np.abs(w)) <= 1.0 / np.sqrt(w.shape[0])
            else:
                assert np.array_equal(w, np.zeros_like(w))


def scalar_state():
    """F=1, no hidden layer, D=1, M=1: a model with scalar heads."""
    config = HFEConfig(num_attrs=1, feature_dim=1, hidden_dims=(), embed_dim=1)
    state = new_train_state(config)
    return state


class TestAdamStep:
    def test_single_weight_matches_closed_form(self):
        state = scalar_state()
        w0 = float(state.model.params["branch.0.embed.W"][0, 0])
        cache_inputs = np.array([[1.0]])
        _, _, cache = forward_cached(state.model, cache_inputs)
        g = 2.0  # d loss / d embedding; with x = 1 the weight gradient equals g
        grads = GradientSet(d_embeddings=[np.array([[g]])], d_logits=np.zeros((1, 1)))
        backward_and_step(state, cache, grads, learning_rate=0.1)
        # first Adam step: m_hat = g, v_hat = g^2, update = g/(|g|+eps) + wd*w
        expected = w0 - 0.1 * (g / (abs(g) + ADAM_EPS) + WEIGHT_DECAY * w0)
        assert abs(float(state.model.params["branch.0.embed.W"][0, 0]) - expected) < 1e-15
        assert state.step == 1

    def test_zero_gradients_change_weights_only_by_decay(self):
        state = scalar_state()
        before = {k: v.copy() for k, v in state.model.params.items()}
        _, _, cache = forward_cached(state.model, np.array([[1.0]]))
        grads = GradientSet(d_embeddings=[np.zeros((1, 1))], d_logits=np.zeros((1, 1)))
        backward_and_step(state, cache, grads, learning_rate=0.1)
        for name, w in state.model.params.items():
            if name.endswith(".W"):
                assert np.allclose(w, before[name] * (1.0 - 0.1 * WEIGHT_DECAY), atol=1e-16)
            else:
                assert np.array_equal(w, before[name])

    def test_non_finite_gradient_aborts_without_update(self):
        state = scalar_state()
        before = {k: v.copy() for k, v in state.model.params.items()}
        _, _, cache = forward_cached(state.model, np.array([[1.0]]))
        grads = GradientSet(d_embeddings=[np.array([[np.nan]])], d_logits=np.zeros((1, 1)))
        with pytest.raises(NumericalError):
            backward_and_step(state, cache, grads, learning_rate=0.1)
        for name, w in state.model.params.items():
            assert np.array_equal(w, before[name])
        assert state.step == 0


class TestEndToEndGradient:
    def objective(self, model, X, attrs, ids, weight):
        """total loss with quintuplets re-mined at the evaluation point;
        instances are kink-free so mining is locally constant."""
        embeddings, probs, _ = forward_cached(model, X)
        report, _ = batch_loss(embeddings, probs, attrs, ids, DEFAULT_MARGINS,
                               LossFlags(), weight)
        return report.total

    def test_weight_gradients_match_finite_differences(self):
        rng = seeded_rng(6)
        for _ in range(5):
            model, X, attrs, ids, weight = random_model_instance(rng)
            embeddings, probs, cache = forward_cached(model, X)
            report, gset = batch_loss(embeddings, probs, attrs, ids,
                                      DEFAULT_MARGINS, LossFlags(), weight)
            analytic = backward(model, cache, gset)
            for name in model.param_names():
                def value_of(w, name=name):
                    patched = model.copy()
                    patched.params[name] = w
                    return self.objective(patched, X, attrs, ids, weight)
                numeric = central_difference(value_of, model.params[name])
                assert relative_error(analytic[name], numeric) < 1e-3, name


class TestTrainingLoop:
    def make_data(self, seed=0):
        samples = generate_synthetic(SynthSpec(num_ids=6, samples_per_id=4,
                                               feature_dim=8, seed=seed))
        return as_arrays(samples)

    def config(self, **kw):
        base = dict(num_attrs=2, feature_dim=8, hidden_dims=(16,), embed_dim=4,
                    total_iters=100, ids_per_batch=3, samples_per_id=2, seed=11)
        base.update(kw)
        return HFEConfig(**base)

    def test_trajectory_bit_identical_for_100_steps(self):
        X, Y, ids = self.make_data()
        runs = []
        for _ in range(2):
            state = new_train_state(self.config())
            train_loop(state, X, Y, ids, LossFlags(), steps=100)
            runs.append(state)
        a, b = runs
        assert a.step == b.step == 100
        for name in a.model.params:
            assert np.array_equal(a.model.params[name], b.model.params[name])
            assert np.array_equal(a.m[name], b.m[name])
            assert np.array_equal(a.v[name], b.v[name])

    def test_ce_descends_on_fixed_batch(self):
        from hfe.losses import ce_loss
        flags = LossFlags(use_inter=False, use_intra=False, use_abr=False,
                          use_dynamic_weight=False)
        descended = 0
        for seed in range(20):
            samples = generate_synthetic(SynthSpec(num_ids=4, samples_per_id=4,
                                                   feature_dim=8, seed=seed))
            X, Y, ids = as_arrays(samples)
            state = new_train_state(self.config(seed=seed, w0=0.0001))
            _, probs0 = forward(state.model, X)
            initial, _ = ce_loss(probs0, Y)
            for _ in range(50):  # full-batch steps
                embeddings, probs, cache = forward_cached(state.model, X)
                report, gset = batch_loss(embeddings, probs, Y, ids,
                                          DEFAULT_MARGINS, flags, weight=0.0)
                backward_and_step(state, cache, gset, state.config.learning_rate)
            _, probs1 = forward(state.model, X)
            final, _ = ce_loss(probs1, Y)
            if final < initial:
                descended += 1
        assert descended >= 19

    def test_schedule_saturates_past_horizon(self):
        X, Y, ids = self.make_data()
        state = new_train_state(self.config(total_iters=10, w0=0.5))
        reports = train_loop(state, X, Y, ids, LossFlags(), steps=14)
        assert reports[0].weight_w == 0.0
        assert reports[10].weight_w == 0.5
        assert reports[13].weight_w == 0.5


class TestCheckpoints:
    def roundtrip(self, tmp_path, steps=7):
        X, Y, ids = TestTrainingLoop().make_data(seed=3)
        config = TestTrainingLoop().config(seed=21)
        state = new_train_state(config)
        train_loop(state, X, Y, ids, LossFlags(), steps=steps)
        path = tmp_path / "model.hfe"
        save_checkpoint(state, path)
        return state, load_checkpoint(path), path, (X, Y, ids)

    def test_round_trip_is_bit_exact(self, tmp_path):
        state, loaded, _, (X, _, _) = self.roundtrip(tmp_path)
        assert loaded.step == state.step
        assert loaded.config == state.config
        for name in state.model.params:
            assert np.array_equal(loaded.model.params[name], state.model.params[name])
            assert np.array_equal(loaded.m[name], state.m[name])
            assert np.array_equal(loaded.v[name], state.v[name])
        _, probs_a = forward(state.model, X)
        _, probs_b = forward(loaded.model, X)
        assert np.array_equal(probs_a, probs_b)
        assert np.array_equal(state.rng.random(16), loaded.rng.random(16))

    def test_corrupted_magic_is_named(self, tmp_path):
        _, _, path, _ = self.roundtrip(tmp_path, steps=1)
        blob = bytearray(path.read_bytes())
        blob[0] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_version_mismatch_rejected(self, tmp_path):
        _, _, path, _ = self.roundtrip(tmp_path, steps=1)
        blob = bytearray(path.read_bytes())
        struct.pack_into("<I", blob, len(CHECKPOINT_MAGIC), 99)
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_truncated_payload_rejected(self, tmp_path):
        _, _, path, _ = self.roundtrip(tmp_path, steps=1)
        blob = path.read_bytes()
        path.write_bytes(blob[:-16])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path)

    def test_dimension_mismatch_rejected(self, tmp_path):
        _, _, path, _ = self.roundtrip(tmp_path, steps=1)
        blob = path.read_bytes()
        header_off = len(CHECKPOINT_MAGIC) + 12
        (header_len,) = struct.unpack_from("<Q", blob, len(CHECKPOINT_MAGIC) + 4)
        header = json.loads(blob[header_off:header_off + header_len])
        header["arrays"][0]["shape"][0] += 1  # manifest no longer matches dims
        patched = json.dumps(header, sort_keys=True).encode()
        path.write_bytes(blob[:len(CHECKPOINT_MAGIC) + 4]
                         + struct.pack("<Q", len(patched)) + patched
                         + blob[header_off + header_len:])
        with pytest.raises(CheckpointError, match="mismatch"):
            load_checkpoint(path)
