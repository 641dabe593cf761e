"""End-to-end properties on synthetic domain pairs. Run with ``--runslow``."""

import json

import numpy as np
import pytest

from test_baselines import _check_against_oracle
from helios.adaptation import AdaptConfig, adapt, evaluate_checkpoint, evaluate_transfer
from helios.baselines import TreeParams, fit_adaboost, fit_gradient_boosting, fit_random_forest, fit_tree
from helios.cli.main import EXIT_OK, main
from helios.data import POWER_CHANNEL, prepare_domain
from helios.evaluation import compute_metrics, epochs_to_saturation, micro_f1, trace_throughput
from helios.features import fit_importance, reduce_dataset, select_features
from helios.synth import generate_domain, make_domain_pair, preset, with_noise_channels
from helios.training import TrainConfig, train_scratch
from helios.utils import thread_limit

pytestmark = pytest.mark.slow

SEEDS = range(5)
N_DAYS = 210
TRAIN = dict(lr=1e-3, batch_size=256, max_epochs=60, patience=15)


def _pair(seed, shift=1.0, n_days=N_DAYS):
    base = preset("sunny-dry")
    base.seed += 100 * seed
    source, target = make_domain_pair(base, shift=shift, n_days=n_days)
    return prepare_domain(source, "source"), prepare_domain(target, "target")


@pytest.fixture(scope="module")
def seed_suite():
    """Per seed: source checkpoint, unadapted and adapted target metrics, traces."""
    results = []
    for seed in SEEDS:
        source, target = _pair(seed)
        with thread_limit(1):
            checkpoint, _ = train_scratch(source.train, source.val, TrainConfig(seed=seed, **TRAIN))
            runs = {}
            for scope in ("partial", "full"):
                adapted, trace = adapt(checkpoint, target.train, target.val,
                                       AdaptConfig(scope=scope, seed=seed, **TRAIN))
                runs[scope] = (evaluate_checkpoint(adapted, target.test), trace)
            _, scratch_trace = train_scratch(target.train, target.val,
                                             TrainConfig(seed=seed, **TRAIN))
        results.append({
            "source_acc": evaluate_checkpoint(checkpoint, source.test).accuracy,
            "transfer": evaluate_transfer(checkpoint, target.test),
            "runs": runs,
            "scratch_trace": scratch_trace,
        })
    return results


class TestAdaptation:
    def test_partial_adaptation_gains_accuracy(self, seed_suite):
        for result in seed_suite:
            adapted, _ = result["runs"]["partial"]
            assert adapted.accuracy - result["transfer"].accuracy >= 0.05

    def test_weighted_f1_gains(self, seed_suite):
        for result in seed_suite:
            adapted, _ = result["runs"]["partial"]
            assert adapted.weighted_f1 - result["transfer"].weighted_f1 >= 0.03

    def test_strong_shift_hurts_transfer(self, seed_suite):
        for result in seed_suite:
            assert result["source_acc"] - result["transfer"].accuracy >= 0.08

    def test_partial_is_faster_and_as_accurate(self, seed_suite):
        for result in seed_suite:
            partial, partial_trace = result["runs"]["partial"]
            full, full_trace = result["runs"]["full"]
            assert trace_throughput(partial_trace) >= 1.2 * trace_throughput(full_trace)
            assert abs(partial.accuracy - full.accuracy) <= 0.015

    def test_adaptation_saturates_sooner(self, seed_suite):
        for result in seed_suite:
            _, partial_trace = result["runs"]["partial"]
            adapted = epochs_to_saturation(partial_trace).epoch
            scratch = epochs_to_saturation(result["scratch_trace"]).epoch
            assert adapted <= 0.5 * scratch


class TestShift:
    def _transfer_gap(self, shift, seed=0, n_days=120):
        source, target = _pair(seed, shift=shift, n_days=n_days)
        with thread_limit(1):
            checkpoint, _ = train_scratch(source.train, source.val, TrainConfig(seed=seed, **TRAIN))
        return (evaluate_checkpoint(checkpoint, source.test).accuracy,
                evaluate_transfer(checkpoint, target.test).accuracy)

    def test_zero_shift_transfers(self):
        source_acc, target_acc = self._transfer_gap(0.0)
        assert abs(source_acc - target_acc) <= 0.02

    def test_transfer_degrades_with_shift(self):
        accuracies = [self._transfer_gap(shift)[1] for shift in (0.0, 0.5, 1.0)]
        assert accuracies[0] >= accuracies[1] >= accuracies[2]


class TestFeatureSelection:
    INFORMATIVE = ("ghi", "dni", "dhi", "temp")

    def _domain(self, seed):
        params = preset("temperate-seasonal")
        params.seed += seed
        frame = generate_domain(params, n_days=120).select(list(self.INFORMATIVE) + [POWER_CHANNEL])
        return prepare_domain(with_noise_channels(frame, 6, seed=seed), "noisy")

    def test_informative_channels_rank_top(self):
        for seed in SEEDS:
            report = fit_importance(self._domain(seed).train, n_trees=100, seed=seed)
            assert set(self.INFORMATIVE) <= set(select_features(report, 6))

    def test_selected_subset_keeps_accuracy(self):
        domain = self._domain(0)
        names = select_features(fit_importance(domain.train, n_trees=100, seed=0), 6)
        cfg = TrainConfig(seed=0, **TRAIN)
        with thread_limit(1):
            full, full_trace = train_scratch(domain.train, domain.val, cfg)
            top, top_trace = train_scratch(reduce_dataset(domain.train, names),
                                           reduce_dataset(domain.val, names), cfg)
        full_acc = evaluate_checkpoint(full, domain.test).accuracy
        top_acc = evaluate_checkpoint(top, reduce_dataset(domain.test, names)).accuracy
        assert top_acc >= full_acc - 0.005
        assert (top_trace.total_seconds / len(top_trace)
                < full_trace.total_seconds / len(full_trace))


def test_network_competes_with_baselines():
    source = prepare_domain(generate_domain(preset("sunny-dry"), n_days=N_DAYS), "sunny-dry")
    with thread_limit(1):
        checkpoint, _ = train_scratch(source.train, source.val, TrainConfig(seed=0, **TRAIN))
    network = evaluate_checkpoint(checkpoint, source.test).accuracy
    train, test = source.train, source.test
    baselines = [
        fit_random_forest(train.features, train.labels, n_trees=100, seed=0, n_classes=5),
        fit_adaboost(train.features, train.labels, n_rounds=100, seed=0, n_classes=5),
        fit_gradient_boosting(train.features, train.labels, n_rounds=100, seed=0, n_classes=5),
    ]
    for model in baselines:
        assert network >= model.score(test.features, test.labels) - 0.01


def test_micro_f1_self_consistency():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        y_true, y_pred = rng.integers(0, 5, size=200), rng.integers(0, 5, size=200)
        metrics = compute_metrics(y_true, y_pred, 5)
        assert micro_f1(metrics.confusion) == metrics.accuracy
        np.testing.assert_array_equal(metrics.confusion.sum(axis=1), np.bincount(y_true, minlength=5))


def test_pipeline_is_byte_reproducible(tmp_path):
    raw = tmp_path / "raw"
    assert main(["synth", "--preset", "sunny-dry", "--shift", "1.0", "--days", "60",
                 "--out", str(raw)]) == EXIT_OK

    def domain(name):
        return {"domain_id": name, "weather": str(raw / f"{name}_weather.csv"),
                "solar": str(raw / f"{name}_solar.csv"),
                "weather_schema": str(raw / "weather_schema.json"),
                "solar_schema": str(raw / "solar_schema.json")}

    config = tmp_path / "cfg.json"
    quick = {"lr": 1e-3, "batch_size": 128, "max_epochs": 5, "patience": 5}
    config.write_text(json.dumps({"seed": 7, "train": quick, "adapt": quick,
                                  "source": domain("sunny-dry"),
                                  "target": domain("sunny-dry-shift1")}))

    outputs = []
    for run in ("a", "b"):
        root = tmp_path / run
        cfg = str(config)
        assert main(["prepare", "--config", cfg, "--out", str(root / "src")]) == EXIT_OK
        assert main(["prepare", "--config", cfg, "--role", "target",
                     "--out", str(root / "tgt")]) == EXIT_OK
        assert main(["train", "--config", cfg, "--data", str(root / "src"),
                     "--out", str(root / "train")]) == EXIT_OK
        assert main(["adapt", "--config", cfg, "--checkpoint", str(root / "train" / "model.hsckpt"),
                     "--data", str(root / "tgt"), "--out", str(root / "adapt")]) == EXIT_OK
        assert main(["eval", "--config", cfg, "--checkpoint", str(root / "adapt" / "model.hsckpt"),
                     "--data", str(root / "tgt"), "--out", str(root / "eval")]) == EXIT_OK
        outputs.append([(root / path).read_bytes() for path in (
            "train/metrics.json", "adapt/metrics.json", "adapt/transfer_metrics.json",
            "eval/metrics.json")])
    assert outputs[0] == outputs[1]


def test_tree_splits_match_exhaustive_search():
    for seed in range(200):
        rng = np.random.default_rng(1000 + seed)
        n, d, k = int(rng.integers(2, 33)), int(rng.integers(1, 5)), int(rng.integers(2, 6))
        X = rng.integers(0, 8, size=(n, d)).astype(float)
        y = rng.integers(0, k, size=n)
        w = rng.uniform(0.5, 2.0, size=n)
        _check_against_oracle(fit_tree(X, y, w, TreeParams(max_depth=2), n_classes=k), X, y, w, k)
