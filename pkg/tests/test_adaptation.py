import inspect
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_threshold_dataset
from helios.adaptation import AdaptConfig, adapt, apply_freeze, evaluate_checkpoint, evaluate_transfer
from helios.data import BinningScheme
from helios.exceptions import AdaptationError, ConfigurationError
from helios.model import ArchitectureSpec, build
from helios.training import TrainConfig, evaluate_epoch, train_scratch

SPEC = ArchitectureSpec(n_features=4, conv_blocks=((4, 3, 1, 1),), fc_hidden=16, n_classes=5)
FAST = dict(lr=1e-2, batch_size=64, max_epochs=20, patience=20, seed=0)


def _reversed(dataset, domain_id="tgt"):
    """Same inputs, class order flipped: a target the source model gets wrong."""
    return replace(dataset, labels=dataset.n_classes - 1 - dataset.labels, domain_id=domain_id)


@pytest.fixture(scope="module")
def source_checkpoint():
    train = make_threshold_dataset(600, 4, seed=1, domain_id="src")
    val = make_threshold_dataset(200, 4, seed=2, split_tag="val", domain_id="src")
    checkpoint, _ = train_scratch(train, val, TrainConfig(**FAST), spec=SPEC)
    return checkpoint


@pytest.fixture(scope="module")
def target_splits():
    train = _reversed(make_threshold_dataset(400, 4, seed=11))
    val = _reversed(make_threshold_dataset(150, 4, seed=12, split_tag="val"))
    test = _reversed(make_threshold_dataset(150, 4, seed=13, split_tag="test"))
    return train, val, test


class TestFreeze:
    def test_partial_counts(self, default_model):
        apply_freeze(default_model, "partial")
        assert default_model.count_parameters(trainable_only=True) == 12677
        trainable = [p.name for p in default_model.trainable_parameters()]
        assert trainable == ["fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias"]
        assert default_model.bn_frozen

    def test_full_counts(self, default_model):
        apply_freeze(default_model, "partial")
        apply_freeze(default_model, "full")
        assert default_model.count_parameters(trainable_only=True) == 14405
        assert default_model.bn_frozen

    def test_unknown_scope(self, default_model):
        with pytest.raises(AdaptationError):
            apply_freeze(default_model, "head")

    def test_config_scope(self):
        with pytest.raises(ConfigurationError):
            AdaptConfig(scope="head")
        assert AdaptConfig.from_dict({"scope": "full", "lr": 0.01}).to_train_config().lr == 0.01


class TestSourceFreeSurface:
    def test_adapt_signature_has_no_source_data(self):
        params = list(inspect.signature(adapt).parameters)
        assert params == ["checkpoint", "target_train", "target_val", "cfg"]

    def test_transfer_signature(self):
        assert list(inspect.signature(evaluate_transfer).parameters) == ["checkpoint", "target_test"]


class TestAdapt:
    def test_partial_keeps_conv_and_bn(self, source_checkpoint, target_splits):
        train, val, _ = target_splits
        cfg = AdaptConfig(scope="partial", **{**FAST, "max_epochs": 1})
        adapted, trace = adapt(source_checkpoint, train, val, cfg)
        assert trace.mode == "adapt-partial"
        for name in ("conv1.weight", "conv1.bias", "bn1.weight", "bn1.bias"):
            np.testing.assert_array_equal(adapted.parameters[name],
                                          source_checkpoint.parameters[name], err_msg=name)
        for layer, (mean, var) in source_checkpoint.bn_running_stats.items():
            np.testing.assert_array_equal(adapted.bn_running_stats[layer][0], mean)
            np.testing.assert_array_equal(adapted.bn_running_stats[layer][1], var)
        assert not np.array_equal(adapted.parameters["fc2.weight"],
                                  source_checkpoint.parameters["fc2.weight"])

    def test_full_updates_conv(self, source_checkpoint, target_splits):
        train, val, _ = target_splits
        adapted, trace = adapt(source_checkpoint, train, val,
                               AdaptConfig(scope="full", **{**FAST, "max_epochs": 2}))
        assert trace.mode == "adapt-full"
        assert not np.array_equal(adapted.parameters["conv1.weight"],
                                  source_checkpoint.parameters["conv1.weight"])

    @pytest.mark.parametrize("scope", ["partial", "full"])
    def test_adaptation_beats_transfer(self, source_checkpoint, target_splits, scope):
        train, val, test = target_splits
        before = evaluate_transfer(source_checkpoint, test).accuracy
        adapted, _ = adapt(source_checkpoint, train, val, AdaptConfig(scope=scope, **FAST))
        after = evaluate_checkpoint(adapted, test).accuracy
        assert after > before

    def test_provenance_and_binning(self, source_checkpoint, target_splits):
        train, val, _ = target_splits
        adapted, _ = adapt(source_checkpoint, train, val,
                           AdaptConfig(**{**FAST, "max_epochs": 1}))
        assert adapted.provenance["source_domain_id"] == "src"
        assert adapted.provenance["target_domain_id"] == "tgt"
        assert adapted.provenance["scope"] == "partial"
        assert adapted.binning == train.binning
        assert adapted.standardizer is train.standardizer

    def test_stored_standardizer(self, source_checkpoint, target_splits):
        train, val, _ = target_splits
        adapted, _ = adapt(source_checkpoint, train, val,
                           AdaptConfig(refit_standardizer=False, **{**FAST, "max_epochs": 1}))
        np.testing.assert_array_equal(adapted.standardizer.mean, source_checkpoint.standardizer.mean)

    def test_feature_mismatch(self, source_checkpoint, target_splits):
        train, val, _ = target_splits
        with pytest.raises(AdaptationError):
            adapt(source_checkpoint, train.select(["f1", "f0", "f2", "f3"]), val, AdaptConfig(**FAST))

    def test_class_count_mismatch(self, source_checkpoint, target_splits):
        train, val, _ = target_splits
        three = BinningScheme(3, (0.0, 1.0, 2.0, 3.0), "tgt")
        coarse = replace(train, labels=np.minimum(train.labels, 2), binning=three)
        with pytest.raises(AdaptationError):
            adapt(source_checkpoint, coarse, val, AdaptConfig(**FAST))


class TestTransfer:
    def test_identical_domain_matches_source_accuracy(self, source_checkpoint):
        test = make_threshold_dataset(200, 4, seed=3, split_tag="test", domain_id="src")
        model = source_checkpoint.to_model()
        _, expected = evaluate_epoch(model, test.restandardize(source_checkpoint.standardizer))
        metrics = evaluate_transfer(source_checkpoint, test)
        assert metrics.accuracy == pytest.approx(expected)
        assert metrics.metadata["arm"] == "without-adaptation"
        assert metrics.metadata["source"] == "src"
        assert metrics.metadata["standardizer"] == "source"

    def test_does_not_touch_checkpoint(self, source_checkpoint, target_splits):
        before = {k: v.copy() for k, v in source_checkpoint.parameters.items()}
        evaluate_transfer(source_checkpoint, target_splits[2])
        for name, value in source_checkpoint.parameters.items():
            np.testing.assert_array_equal(value, before[name])
