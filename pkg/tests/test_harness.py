import warnings
from fractions import Fraction

import numpy as np
import pytest

from shufflebits.bitperm import PermutationKey, identity_key, rotation_key
from shufflebits.codec import FeatureBatch, bit_frequency_profile, encrypt_batch
from shufflebits.config import load_config
from shufflebits.errors import (
    DegenerateFeatures,
    DimMismatch,
    HarnessError,
    InvalidProportions,
    MetricLengthMismatch,
    MissingClass,
    ProfileLengthInvalid,
    ZeroVector,
)
from shufflebits.harness import (
    AttackSettings,
    Probe,
    accuracy,
    apportion,
    balanced_accuracy,
    class_weights,
    cosine_distance,
    fit_probe,
    mean_cosine_distance,
    planted_frequency_words,
    predict_probe,
    recover_key_from_frequencies,
    run_attack_demo,
    split_dataset,
    stratified_indices,
    synth_dataset,
    train_probe,
    words_to_features,
)
from shufflebits.keystream import KeyMode


# -------------------------
# Synthetic data
# -------------------------
def test_synth_dataset_shape_and_determinism():
    a = synth_dataset(7, 100, 16, 3, 0.1)
    b = synth_dataset(7, 100, 16, 3, 0.1)
    assert a.features.shape == (100, 16)
    assert a.features.dtype == np.float32
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    assert set(a.labels.tolist()) == {0, 1, 2}


def test_noise_free_rows_equal_planted_vectors():
    ds = synth_dataset(1, 20, 4, 2, 0.0)
    assert np.array_equal(ds.features, ds.planted_matrix[ds.labels])


def test_apportion_largest_remainder():
    assert apportion([0.25, 0.75], 10).tolist() == [3, 7]
    assert apportion([0.5, 0.5], 7).tolist() == [4, 3]
    assert apportion([0.2, 0.3, 0.5], 100).tolist() == [20, 30, 50]


def test_proportions_are_honoured():
    ds = synth_dataset(3, 1000, 2, 2, 0.1, class_proportions=[0.9, 0.1])
    assert np.bincount(ds.labels).tolist() == [900, 100]


@pytest.mark.parametrize("props", [[0.5, 0.6], [1.2, -0.2], [1.0, 0.0], [1.0]])
def test_invalid_proportions(props):
    with pytest.raises(InvalidProportions):
        synth_dataset(0, 10, 2, 2, 0.1, class_proportions=props)


def test_stratified_split_keeps_every_class():
    ds = synth_dataset(5, 200, 3, 2, 0.1, class_proportions=[0.8, 0.2])
    train, test = split_dataset(ds, 0.5, seed=1)
    assert train.count + test.count == 200
    assert np.bincount(test.labels).tolist() == [80, 20]
    assert np.bincount(train.labels).tolist() == [80, 20]


def test_words_to_features_zeroes_non_finite():
    words = np.array([0x3F800000, 0x7F800000, 0x7FC00000, 0xBF800000], dtype=np.uint32)
    assert words_to_features(words, 2, 2).tolist() == [[1.0, 0.0], [0.0, -1.0]]


def test_words_to_features_is_silent_on_nan_payloads(special_words):
    words = np.resize(special_words, 24)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        features = words_to_features(words, 4, 6)
    assert np.isfinite(features).all()


def test_stratified_indices_partition_rows():
    labels = np.array([0, 1, 0, 0, 1, 2, 2, 0, 1, 2])
    train, test = stratified_indices(labels, 3, 0.5, seed=4)
    assert sorted(train.tolist() + test.tolist()) == list(range(10))
    assert np.array_equal(train, np.sort(train))
    for c in range(3):
        assert (labels[train] == c).any() and (labels[test] == c).any()
    again = stratified_indices(labels, 3, 0.5, seed=4)
    assert np.array_equal(again[0], train) and np.array_equal(again[1], test)


def test_split_dataset_uses_stratified_indices():
    ds = synth_dataset(9, 60, 4, 3, 0.1)
    train_rows, test_rows = stratified_indices(ds.labels, ds.classes, 0.5, seed=2)
    train, test = split_dataset(ds, 0.5, seed=2)
    assert np.array_equal(train.features, ds.features[train_rows])
    assert np.array_equal(test.labels, ds.labels[test_rows])


# -------------------------
# Metrics
# -------------------------
def test_class_weights():
    w = class_weights([0, 0, 0, 1])
    assert w.tolist() == pytest.approx([4 / 6, 2.0])
    with pytest.raises(MissingClass):
        class_weights([0, 0, 0])
    with pytest.raises(MissingClass):
        class_weights([0, 2], classes=3)


def _recall_oracle(pred, lab):
    recalls = []
    for c in sorted(set(lab)):
        members = [i for i, y in enumerate(lab) if y == c]
        hits = sum(1 for i in members if pred[i] == c)
        recalls.append(Fraction(hits, len(members)))
    return float(sum(recalls) / len(recalls))


def test_balanced_accuracy_matches_oracle(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        c = int(rng.integers(2, 5))
        lab = rng.integers(0, c, size=n).tolist()
        pred = rng.integers(0, c, size=n).tolist()
        assert balanced_accuracy(pred, lab) == pytest.approx(_recall_oracle(pred, lab), abs=1e-12)


def test_balanced_accuracy_vs_plain_accuracy_on_imbalance():
    labels = [0] * 90 + [1] * 10
    always_zero = [0] * 100
    assert accuracy(always_zero, labels) == 0.9
    assert balanced_accuracy(always_zero, labels) == 0.5


def test_metric_length_checks():
    with pytest.raises(MetricLengthMismatch):
        balanced_accuracy([0, 1], [0])
    with pytest.raises(MetricLengthMismatch):
        accuracy([0], [0, 1])
    with pytest.raises(MissingClass):
        balanced_accuracy([0, 0], [0, 0], classes=2)


def test_cosine_distance():
    assert cosine_distance([1, 2, 3], [2, 4, 6]) == pytest.approx(0.0, abs=1e-12)
    assert cosine_distance([1, 0], [0, 1]) == pytest.approx(1.0)
    # opposite vectors clamp to 1
    assert cosine_distance([1, 0], [-1, 0]) == 1.0
    with pytest.raises(ZeroVector):
        cosine_distance([0, 0], [1, 1])
    with pytest.raises(MetricLengthMismatch):
        cosine_distance([1, 2], [1, 2, 3])


def test_mean_cosine_distance():
    U = np.array([[1.0, 0.0], [0.0, 1.0]])
    V = np.array([[1.0, 0.0], [1.0, 0.0]])
    assert mean_cosine_distance(U, V) == pytest.approx(0.5)
    with pytest.raises(MetricLengthMismatch):
        mean_cosine_distance(U, V[:1])


# -------------------------
# Probe
# -------------------------
def test_probe_learns_plaintext_task():
    ds = synth_dataset(2021, 400, 16, 2, 0.1)
    train, test = split_dataset(ds, 0.5, seed=0)
    probe = train_probe(train, 100, 0.5)
    assert balanced_accuracy(predict_probe(probe, test.features), test.labels) >= 0.9


def test_probe_loss_decreases():
    ds = synth_dataset(4, 300, 8, 3, 0.5)
    _, history = fit_probe(ds, 50, 0.1)
    assert history.final_loss < history.initial_loss
    assert len(history.balanced_accuracies) == 50
    assert 0 <= history.best_epoch < 50


def test_probe_minibatch_and_decay():
    ds = synth_dataset(4, 300, 8, 2, 0.1)
    probe = train_probe(ds, 20, 0.5, batch_size=32, lr_decay=True, seed=3)
    assert balanced_accuracy(predict_probe(probe, ds.features), ds.labels) >= 0.9


def test_probe_argument_checks():
    ds = synth_dataset(0, 20, 2, 2, 0.1)
    with pytest.raises(HarnessError):
        train_probe(ds, 0, 0.1)
    with pytest.raises(HarnessError):
        train_probe(ds, 5, 0.0)
    with pytest.raises(DegenerateFeatures):
        train_probe(ds.subset(np.array([], dtype=np.int64)), 5, 0.1)


def test_predict_ties_go_to_lowest_class():
    probe = Probe(np.zeros(3), np.ones(3), np.zeros((3, 3)), np.zeros(3))
    assert predict_probe(probe, np.ones((4, 3))).tolist() == [0, 0, 0, 0]
    with pytest.raises(DimMismatch):
        predict_probe(probe, np.ones((2, 4)))


# -------------------------
# Frequency key recovery
# -------------------------
def test_recover_planted_key(rng):
    plain = (np.arange(32) + 1) / 33
    key = PermutationKey.random(rng)
    cipher = np.empty(32)
    cipher[list(key.map)] = plain
    result = recover_key_from_frequencies(plain, cipher)
    assert result.key == key
    assert not result.ambiguous
    assert result.min_gap == pytest.approx(1 / 33)


def test_recover_from_sampled_profiles(rng):
    key = PermutationKey.random(rng)
    words = planted_frequency_words(rng, 50_000)
    batch = FeatureBatch(words, words.size, 1)
    plain = bit_frequency_profile(batch)
    cipher = bit_frequency_profile(encrypt_batch(batch, KeyMode.FIXED_KEY, key=key))
    assert recover_key_from_frequencies(plain, cipher, sampling_error=0.003).key == key


def test_uniform_profile_is_ambiguous():
    flat = np.full(32, 0.5)
    result = recover_key_from_frequencies(flat, flat)
    assert result.ambiguous
    assert result.key == identity_key()


def test_near_ties_are_ambiguous():
    plain = (np.arange(32) + 1) / 33
    plain[5] = plain[4] + 1e-4
    assert recover_key_from_frequencies(plain, plain, sampling_error=1e-3).ambiguous
    assert not recover_key_from_frequencies(plain, plain).ambiguous


def test_profile_length_checked():
    with pytest.raises(ProfileLengthInvalid):
        recover_key_from_frequencies(np.zeros(31), np.zeros(32))


# -------------------------
# End-to-end demo
# -------------------------
def test_attack_settings_from_config():
    cfg = load_config({"SHUFFLEBITS_ATTACK_SEED": "9"})
    s = AttackSettings.from_config(cfg, count=100, noise=None)
    assert s.seed == 9
    assert s.count == 100
    assert s.noise == 0.1


def test_default_attack_demo_separates_plain_and_cipher():
    report = run_attack_demo(AttackSettings())
    assert report.seed == 2021
    assert report.plain_balanced_accuracy >= 0.9
    assert 0.4 <= report.cipher_balanced_accuracy <= 0.6
    assert report.roundtrip_cosine_distance == pytest.approx(0.0, abs=1e-12)
    assert report.keyspace == 263130836933693530167218012160000000
    assert report.frequency_attack_result["recovered_exact_key"] is True

    frame = report.to_frame()
    assert "plain_balanced_accuracy" in frame["metric"].tolist()
    assert '"seed": 2021' in report.to_json()


# -------------------------
# Worked examples
# -------------------------
def test_worked_examples():
    assert np.bincount(synth_dataset(0, 100, 3, 2, 0.1, [0.75, 0.25]).labels).tolist() == [75, 25]
    assert class_weights([0, 0, 1, 1]).tolist() == [1.0, 1.0]
    assert balanced_accuracy([0, 1, 1, 1], [0, 0, 1, 1]) == 0.75
    assert balanced_accuracy([1, 0, 1], [1, 0, 1]) == 1.0
    assert cosine_distance([1, 0], [1, 1]) == pytest.approx(1 - 1 / np.sqrt(2))


def test_class_weights_average_to_one(rng):
    labels = rng.integers(0, 4, size=500)
    w = class_weights(labels)
    assert np.mean(w[labels]) == pytest.approx(1.0)


def test_cosine_distance_is_scale_invariant(rng):
    u = rng.standard_normal(16)
    for alpha in (1e-3, 0.5, 7.0, 1e6):
        assert cosine_distance(u, alpha * u) == pytest.approx(0.0, abs=1e-12)


def test_zero_noise_probe_is_perfect():
    ds = synth_dataset(11, 200, 8, 3, 0.0)
    probe = train_probe(ds, 200, 0.5)
    assert balanced_accuracy(predict_probe(probe, ds.features), ds.labels) == 1.0


def test_recover_rotation_key():
    plain = np.arange(32) / 33
    key = rotation_key(1)
    cipher = np.empty(32)
    cipher[list(key.map)] = plain
    assert recover_key_from_frequencies(plain, cipher).key == key
