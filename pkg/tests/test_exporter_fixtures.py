"""Cross-implementation checks against exporter-produced fixture files.

The sibling ``frontend`` package exports weight archives, forward-parity
fixtures, and feature caches in this package's binary formats (see its
README for regeneration).  These tests skip when the fixture tree is absent;
the rest of the suite never depends on it.
"""

from pathlib import Path

import numpy as np
import pytest

from contrastiq import dataset as ds
from contrastiq.archive import load_weight_archive, save_weight_archive
from contrastiq.features import (
    backbone_forward,
    config_from_json,
    load_feature_cache,
)
from contrastiq.imagecore import Tensor3
from contrastiq.regressor import TrainConfig, train

FIXTURES = Path(__file__).resolve().parent / "fixtures" / "exporter"

pytestmark = pytest.mark.skipif(
    not FIXTURES.is_dir(), reason="exporter fixtures not generated (see frontend/)"
)


def load_fixture(name: str):
    root = FIXTURES / name
    cfg = config_from_json((root / "config.json").read_text())
    weights = load_weight_archive(root / "weights.cqwa")
    input_arch = load_weight_archive(root / "input.cqwa")
    reference = load_weight_archive(root / "reference.cqwa")
    return cfg, weights, Tensor3(input_arch["input"]), reference["features"]


class TestForwardParity:
    def test_fixture_forward_matches_reference(self):
        cfg, weights, tensor, reference = load_fixture("nano")
        ours = backbone_forward(tensor, cfg, weights)
        worst = float(np.max(np.abs(ours - reference)))
        print(f"  parity max abs diff {worst:.2e} over {reference.size} features")
        assert worst < 1e-3

    def test_perturbed_weights_fail_parity(self, tmp_path):
        cfg, weights, tensor, reference = load_fixture("nano")
        name = "head.conv.weight"
        tampered = weights.entries[name].copy()
        tampered.flat[0] += 0.05
        weights.entries[name] = tampered
        save_weight_archive(weights, tmp_path / "tampered.cqwa")  # stays a valid archive
        ours = backbone_forward(tensor, cfg, load_weight_archive(tmp_path / "tampered.cqwa"))
        assert float(np.max(np.abs(ours - reference))) > 1e-3


class TestExportedCaches:
    @pytest.mark.parametrize("model,dim", [
        ("efficientnet-b0", 1280),
        ("resnet18", 512),
        ("mobilenet-v2", 1280),
    ])
    def test_cache_loads_and_trains(self, model, dim):
        root = FIXTURES / "caches"
        cache_path = root / f"{model}.cqwa"
        if not cache_path.is_file():
            pytest.skip(f"{cache_path} not exported")
        cache = load_feature_cache(cache_path)
        assert cache.dim == dim
        manifest = ds.split(ds.load_manifest(root / "manifest.csv"), 0.75, seed=1)
        norm = ds.fit_normalizer(manifest.subset(ds.TRAIN))
        params, report = train(cache, manifest, norm, TrainConfig(epochs=2, seed=0))
        assert params.in_dim == dim
        assert len(report.epochs) == 2
