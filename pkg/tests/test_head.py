import numpy as np
import pytest

from contrastiq.dataset import ZScoreNormalizer
from contrastiq.errors import DimMismatch, EmptyBatch, MissingParameter, StaleTrace
from contrastiq.regressor import (
    ARCH_MLP,
    HeadParams,
    head_backward,
    head_forward,
    init_head,
    load_head,
    make_dropout_mask,
    mse_loss,
    save_head,
)
from contrastiq.regressor.head import HIDDEN1, HIDDEN2, fit_input_standardizer, fold_input_standardizer
from contrastiq.rng import SeededRng


def zero_params(in_dim: int, dtype=np.float32) -> HeadParams:
    return HeadParams(
        w1=np.zeros((HIDDEN1, in_dim), dtype=dtype), b1=np.zeros(HIDDEN1, dtype=dtype),
        w2=np.zeros((HIDDEN2, HIDDEN1), dtype=dtype), b2=np.zeros(HIDDEN2, dtype=dtype),
        w3=np.zeros((1, HIDDEN2), dtype=dtype), b3=np.zeros(1, dtype=dtype),
    )


def numeric_grad(f, params: HeadParams, name: str, index: tuple, h: float = 1e-5) -> float:
    tensor = params.tensors()[name]
    orig = tensor[index]
    tensor[index] = orig + h
    up = f()
    tensor[index] = orig - h
    down = f()
    tensor[index] = orig
    return (up - down) / (2.0 * h)


class TestForward:
    def test_constant_network_outputs_bias(self):
        p = zero_params(8)
        p.b3[0] = 0.7
        for seed in range(3):
            x = np.random.default_rng(seed).standard_normal(8).astype(np.float32)
            pred, _ = head_forward(x, p)
            assert pred == pytest.approx(0.7)

    def test_eval_is_deterministic(self):
        p = init_head(16, SeededRng(0))
        x = np.random.default_rng(1).standard_normal(16).astype(np.float32)
        a, _ = head_forward(x, p, mode="eval")
        b, _ = head_forward(x, p, mode="eval")
        assert a == b

    def test_hand_traced_forward(self):
        p = zero_params(2)
        p.w1[0] = [1.0, 0.0]
        p.w2[0, 0] = 1.0
        p.w3[0, 0] = 1.0
        pred, _ = head_forward(np.array([3.0, -1.0], dtype=np.float32), p)
        assert pred == 3.0

    def test_dim_mismatch(self):
        p = init_head(16, SeededRng(0))
        with pytest.raises(DimMismatch):
            head_forward(np.zeros(8, dtype=np.float32), p)

    def test_batched_matches_single(self):
        p = init_head(8, SeededRng(2))
        xs = np.random.default_rng(3).standard_normal((5, 8)).astype(np.float32)
        batch, _ = head_forward(xs, p, mode="eval")
        singles = [head_forward(x, p, mode="eval")[0] for x in xs]
        assert np.allclose(batch, singles, atol=1e-6)

    def test_train_mode_needs_rng_or_mask(self):
        p = init_head(8, SeededRng(2))
        with pytest.raises(ValueError):
            head_forward(np.zeros(8, dtype=np.float32), p, mode="train")


class TestBackward:
    def test_zero_upstream_gives_zero_grads(self):
        p = init_head(8, SeededRng(4), dtype=np.float64)
        x = np.random.default_rng(5).standard_normal(8)
        _, trace = head_forward(x, p)
        grads = head_backward(trace, 0.0, p)
        for tensor in grads.tensors().values():
            assert np.all(tensor == 0.0)

    def test_dropout_masked_unit_gets_zero_gradient(self):
        p = init_head(8, SeededRng(6), dtype=np.float64)
        x = np.random.default_rng(7).standard_normal(8)
        mask = np.full((1, HIDDEN1), 2.0)
        mask[0, :HIDDEN1 // 2] = 0.0  # drop the first half
        _, trace = head_forward(x, p, mode="train", mask=mask)
        grads = head_backward(trace, 1.0, p)
        assert np.all(grads.w1[: HIDDEN1 // 2] == 0.0)
        assert np.all(grads.b1[: HIDDEN1 // 2] == 0.0)

    def test_stale_trace_rejected(self):
        p = init_head(8, SeededRng(8), dtype=np.float64)
        q = init_head(8, SeededRng(9), dtype=np.float64)
        x = np.random.default_rng(10).standard_normal(8)
        _, trace = head_forward(x, p)
        with pytest.raises(StaleTrace):
            head_backward(trace, 1.0, q)

    @pytest.mark.parametrize("use_mask", [False, True])
    def test_gradients_match_finite_differences(self, use_mask):
        rng = SeededRng(11)
        p = init_head(16, rng.derive("p"), dtype=np.float64)
        x = 2.0 * rng.derive("x").unit_array(16) - 1.0
        mask = None
        if use_mask:
            mask = make_dropout_mask(rng.derive("m"), (1, HIDDEN1), 0.5, dtype=np.float64)

        def forward():
            pred, _ = head_forward(x, p, mode="train" if use_mask else "eval", mask=mask)
            return float(pred)

        _, trace = head_forward(x, p, mode="train" if use_mask else "eval", mask=mask)
        grads = head_backward(trace, 1.0, p)
        picker = np.random.default_rng(12)
        for name, tensor in grads.tensors().items():
            flat_indices = picker.choice(tensor.size, size=min(6, tensor.size), replace=False)
            for flat in flat_indices:
                index = np.unravel_index(flat, tensor.shape)
                num = numeric_grad(forward, p, name, index)
                ana = tensor[index]
                assert abs(ana - num) <= 1e-6 * max(abs(ana), abs(num), 1e-6), (name, index)


class TestDropoutExpectation:
    def test_masked_mean_close_to_eval_forward(self):
        # fixed instance biased into the relu-linear regime: with pre2 almost
        # surely positive under mask noise, E[masked forward] equals the eval
        # forward (inverted dropout is mean-preserving through linear layers)
        rng = SeededRng(77)
        p = init_head(16, rng.derive("init"), dtype=np.float64)
        p.b2 += 4.0
        p.b3 += 2.0
        x = 2.0 * rng.derive("x").unit_array(16) - 1.0
        eval_pred, _ = head_forward(x, p, mode="eval")
        mask_rng = rng.derive("masks")
        total = 0.0
        n = 10_000
        for _ in range(n):
            pred, _ = head_forward(x, p, mode="train", rng=mask_rng, dropout=0.5)
            total += pred
        assert abs(total / n - eval_pred) <= 0.02 * abs(eval_pred)


class TestMseLoss:
    def test_zero_when_equal(self):
        loss, grad = mse_loss(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
        assert loss == 0.0
        assert np.all(grad == 0.0)

    def test_hand_value(self):
        loss, _ = mse_loss(np.array([1.0, 3.0]), np.array([0.0, 0.0]))
        assert loss == 5.0

    def test_gradient_value(self):
        _, grad = mse_loss(np.array([2.0]), np.array([0.0]))
        assert grad.tolist() == [4.0]

    def test_empty_batch(self):
        with pytest.raises(EmptyBatch):
            mse_loss(np.array([]), np.array([]))


class TestStandardizerFold:
    def test_folded_head_equals_standardized_forward(self):
        rng = SeededRng(13)
        p = init_head(8, rng.derive("p"), dtype=np.float64)
        x = np.random.default_rng(14).standard_normal((20, 8))
        shift, scale = fit_input_standardizer(x)
        standardized = (x - shift) / scale
        direct, _ = head_forward(standardized, p, mode="eval")
        folded = fold_input_standardizer(p, shift, scale)
        via_fold, _ = head_forward(x, folded, mode="eval")
        assert np.allclose(direct, via_fold, atol=1e-9)

    def test_single_sample_gives_identity(self):
        shift, scale = fit_input_standardizer(np.ones((1, 4)))
        assert np.all(shift == 0.0) and np.all(scale == 1.0)

    def test_zero_variance_dimension_guarded(self):
        x = np.random.default_rng(15).standard_normal((10, 3))
        x[:, 1] = 7.0
        _, scale = fit_input_standardizer(x)
        assert scale[1] == 1.0


class TestPersistence:
    def test_roundtrip_bit_identical(self, tmp_path):
        p = init_head(16, SeededRng(20))
        norm = ZScoreNormalizer(mu=3.1, sigma=0.9)
        save_head(p, tmp_path / "h.cqwa", norm, arch=ARCH_MLP, extractor_tag="handcrafted")
        loaded, norm2, meta = load_head(tmp_path / "h.cqwa")
        for a, b in zip(p.tensors().values(), loaded.tensors().values()):
            assert np.array_equal(a, b)
        assert norm2 == norm
        assert meta["arch"] == ARCH_MLP
        assert meta["extractor_tag"] == "handcrafted"

    def test_wrong_in_dim_metadata(self, tmp_path):
        from contrastiq.archive import load_weight_archive, save_weight_archive

        p = init_head(16, SeededRng(21))
        save_head(p, tmp_path / "h.cqwa", ZScoreNormalizer(mu=3.0, sigma=1.0))
        arch = load_weight_archive(tmp_path / "h.cqwa")
        arch.metadata["in_dim"] = "99"
        save_weight_archive(arch, tmp_path / "h2.cqwa")
        with pytest.raises(DimMismatch):
            load_head(tmp_path / "h2.cqwa")

    def test_missing_layer_entry(self, tmp_path):
        from contrastiq.archive import load_weight_archive, save_weight_archive

        p = init_head(16, SeededRng(22))
        save_head(p, tmp_path / "h.cqwa", ZScoreNormalizer(mu=3.0, sigma=1.0))
        arch = load_weight_archive(tmp_path / "h.cqwa")
        del arch.entries["layer2.bias"]
        save_weight_archive(arch, tmp_path / "h2.cqwa")
        with pytest.raises(MissingParameter):
            load_head(tmp_path / "h2.cqwa")
