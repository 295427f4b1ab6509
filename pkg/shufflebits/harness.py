# shufflebits/harness.py
"""
Desk-scale threat model.

An adversary holds intercepted feature vectors plus a labelled local dataset
and trains a probe (per-feature standardization + one dense layer, class-weighted
softmax cross-entropy) to predict an auxiliary attribute. Plaintext features
leak the attribute; PER_ELEMENT ciphertext does not. A second attack recovers a
FIXED_KEY permutation from per-position bit frequencies alone.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from .bitperm import WIDTH, PermutationKey, identity_key
from .codec import (
    FeatureBatch,
    bit_frequency_profile,
    bits_to_words,
    decrypt_batch,
    encrypt_batch,
)
from .errors import (
    DegenerateFeatures,
    DimMismatch,
    HarnessError,
    InvalidProportions,
    MetricLengthMismatch,
    MissingClass,
    ProfileLengthInvalid,
    ZeroVector,
)
from .keystream import KeyMode, MasterSecret, Nonce, keyspace_size
from .logs import get_logger

log = get_logger(__name__)

VARIANCE_EPS = 1e-5


# -------------------------
# Data
# -------------------------
@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    features: np.ndarray
    labels: np.ndarray
    planted_matrix: np.ndarray
    noise_scale: float

    @property
    def count(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def classes(self) -> int:
        return int(self.planted_matrix.shape[0])

    def subset(self, index: np.ndarray) -> "SyntheticDataset":
        return replace(self, features=self.features[index], labels=self.labels[index])


def apportion(proportions: Sequence[float], count: int) -> np.ndarray:
    """Largest-remainder integer split of `count`; ties go to the lower class index."""
    p = np.asarray(proportions, dtype=np.float64)
    quotas = p * count
    base = np.floor(quotas).astype(np.int64)
    short = int(count - base.sum())
    order = sorted(range(p.size), key=lambda c: (-(quotas[c] - base[c]), c))
    for c in order[:short]:
        base[c] += 1
    # every class at least once: borrow from the largest class
    for c in np.flatnonzero(base == 0):
        donor = int(np.argmax(base))
        base[donor] -= 1
        base[c] += 1
    return base


def synth_dataset(
    seed: int,
    count: int,
    dim: int,
    classes: int,
    noise_scale: float,
    class_proportions: Optional[Sequence[float]] = None,
) -> SyntheticDataset:
    """Rows are planted_matrix[label] + N(0, noise_scale^2) noise, stored as binary32."""
    if classes < 2 or count < classes:
        raise HarnessError(f"Need count >= classes >= 2 (count={count}, classes={classes})")
    if dim < 1:
        raise HarnessError(f"dim must be >= 1, got {dim}")
    if noise_scale < 0:
        raise HarnessError(f"noise_scale must be >= 0, got {noise_scale}")

    if class_proportions is None:
        class_proportions = [1.0 / classes] * classes
    p = np.asarray(class_proportions, dtype=np.float64)
    if p.size != classes:
        raise InvalidProportions(f"{p.size} proportions given for {classes} classes")
    if np.any(p <= 0) or not np.isclose(p.sum(), 1.0, rtol=0, atol=1e-9):
        raise InvalidProportions(f"Proportions must be positive and sum to 1, got {p.tolist()}")

    rng = np.random.default_rng(seed)
    counts = apportion(p, count)
    labels = rng.permutation(np.repeat(np.arange(classes), counts))
    planted = rng.standard_normal((classes, dim)).astype(np.float32)
    noise = rng.standard_normal((count, dim)) * noise_scale
    features = (planted[labels].astype(np.float64) + noise).astype(np.float32)
    return SyntheticDataset(features, labels.astype(np.int64), planted, float(noise_scale))


def stratified_indices(
    labels: np.ndarray, classes: int, test_fraction: float = 0.5, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (train, test) row indices; every class keeps at least one row on each side when it can."""
    if not 0.0 < test_fraction < 1.0:
        raise HarnessError(f"test_fraction must be in (0, 1), got {test_fraction}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(classes):
        rows = rng.permutation(np.flatnonzero(labels == c))
        n_test = int(round(rows.size * test_fraction))
        if rows.size >= 2:
            n_test = min(max(n_test, 1), rows.size - 1)
        test_idx.append(rows[:n_test])
        train_idx.append(rows[n_test:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def split_dataset(dataset: SyntheticDataset, test_fraction: float = 0.5, seed: int = 0):
    train, test = stratified_indices(dataset.labels, dataset.classes, test_fraction, seed)
    return dataset.subset(train), dataset.subset(test)


def words_to_features(words: np.ndarray, count: int, dim: int) -> np.ndarray:
    """Adversary's view of ciphertext: reinterpret as binary32, non-finite -> 0."""
    values = np.asarray(words, dtype=np.uint32).view(np.float32).reshape(count, dim)
    # zeroed before widening to float64
    return np.where(np.isfinite(values), values, np.float32(0.0)).astype(np.float64)


# -------------------------
# Metrics
# -------------------------
def _class_counts(labels: np.ndarray, classes: Optional[int]) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise MissingClass("No labels given")
    if labels.min() < 0:
        raise HarnessError("Class indices must be >= 0")
    n_classes = classes if classes is not None else int(labels.max()) + 1
    return np.bincount(labels, minlength=n_classes)


def class_weights(labels: Sequence[int], classes: Optional[int] = None) -> np.ndarray:
    """w_c = N / (C * n_c): inversely proportional to class frequency."""
    counts = _class_counts(np.asarray(labels), classes)
    if counts.size < 2:
        raise MissingClass("Class weights need at least two classes")
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise MissingClass(f"Classes without samples: {missing.tolist()}")
    return counts.sum() / (counts.size * counts.astype(np.float64))


def _confusion(predictions: np.ndarray, labels: np.ndarray, classes: int) -> np.ndarray:
    idx = labels * classes + predictions
    return np.bincount(idx, minlength=classes * classes).reshape(classes, classes)


def balanced_accuracy(predictions: Sequence[int], labels: Sequence[int], classes: Optional[int] = None) -> float:
    """Mean of per-class recall over the classes in `labels` (or all `classes`)."""
    pred = np.asarray(predictions, dtype=np.int64)
    lab = np.asarray(labels, dtype=np.int64)
    if pred.shape != lab.shape:
        raise MetricLengthMismatch(f"{pred.size} predictions vs {lab.size} labels")
    counts = _class_counts(lab, classes)
    if classes is not None and np.any(counts == 0):
        raise MissingClass(f"Classes without labels: {np.flatnonzero(counts == 0).tolist()}")
    n_classes = max(counts.size, int(pred.max()) + 1 if pred.size else 0)
    cm = _confusion(pred, lab, n_classes)
    present = np.flatnonzero(np.bincount(lab, minlength=n_classes) > 0)
    recalls = cm[present, present] / cm[present].sum(axis=1)
    return float(recalls.mean())


def accuracy(predictions: Sequence[int], labels: Sequence[int]) -> float:
    pred = np.asarray(predictions)
    lab = np.asarray(labels)
    if pred.shape != lab.shape:
        raise MetricLengthMismatch(f"{pred.size} predictions vs {lab.size} labels")
    if lab.size == 0:
        raise MissingClass("No labels given")
    return float(np.mean(pred == lab))


def cosine_distance(u: Sequence[float], v: Sequence[float]) -> float:
    """1 - cos(u, v), clamped to [0, 1]."""
    a = np.asarray(u, dtype=np.float64).reshape(-1)
    b = np.asarray(v, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise MetricLengthMismatch(f"Vector lengths differ: {a.size} vs {b.size}")
    na = float(np.dot(a, a))
    nb = float(np.dot(b, b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("Cosine distance is undefined for a zero vector")
    sim = float(np.dot(a, b)) / float(np.sqrt(na * nb))
    return float(min(1.0, max(0.0, 1.0 - sim)))


def mean_cosine_distance(U, V) -> float:
    A = np.asarray(U, dtype=np.float64)
    B = np.asarray(V, dtype=np.float64)
    if A.shape != B.shape:
        raise MetricLengthMismatch(f"Shapes differ: {A.shape} vs {B.shape}")
    if A.ndim == 1:
        return cosine_distance(A, B)
    return float(np.mean([cosine_distance(a, b) for a, b in zip(A, B)]))


# -------------------------
# Probe
# -------------------------
@dataclass(frozen=True, eq=False)
class Probe:
    mean: np.ndarray
    variance: np.ndarray
    weights: np.ndarray
    bias: np.ndarray

    @property
    def classes(self) -> int:
        return int(self.weights.shape[0])

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])

    def standardize(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.dim:
            raise DimMismatch(f"Probe expects dim {self.dim}, got {X.shape[1]}")
        return (X - self.mean) / np.sqrt(self.variance)

    def logits(self, features) -> np.ndarray:
        return self.standardize(features) @ self.weights.T + self.bias


@dataclass
class TrainingHistory:
    losses: list[float] = field(default_factory=list)
    balanced_accuracies: list[float] = field(default_factory=list)
    best_epoch: int = -1

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _weighted_loss(P: np.ndarray, labels: np.ndarray, sample_w: np.ndarray) -> float:
    picked = np.clip(P[np.arange(labels.size), labels], 1e-300, None)
    return float(np.sum(sample_w * -np.log(picked)) / np.sum(sample_w))


def fit_probe(
    dataset: SyntheticDataset,
    epochs: int,
    learning_rate: float,
    *,
    batch_size: Optional[int] = None,
    lr_decay: bool = False,
    seed: int = 0,
) -> tuple[Probe, TrainingHistory]:
    """
    Gradient descent on class-weighted softmax cross-entropy over standardized
    features. Returns the epoch with the best training balanced accuracy
    (earliest on ties) and the full loss / accuracy history.
    """
    if epochs < 1:
        raise HarnessError(f"epochs must be >= 1, got {epochs}")
    if not learning_rate > 0:
        raise HarnessError(f"learning_rate must be > 0, got {learning_rate}")
    if dataset.count == 0 or dataset.dim == 0:
        raise DegenerateFeatures("Cannot train a probe on an empty dataset")

    X = np.asarray(dataset.features, dtype=np.float64)
    y = np.asarray(dataset.labels, dtype=np.int64)
    C = dataset.classes
    weights_c = class_weights(y, C)
    sample_w = weights_c[y]

    mean = X.mean(axis=0)
    variance = np.maximum(X.var(axis=0), VARIANCE_EPS)
    Z = (X - mean) / np.sqrt(variance)
    Y = np.eye(C)[y]

    W = np.zeros((C, dataset.dim))
    b = np.zeros(C)
    best = (-1.0, W.copy(), b.copy())
    history = TrainingHistory()
    rng = np.random.default_rng(seed)
    n = y.size
    step = n if not batch_size or batch_size >= n else int(batch_size)

    for epoch in range(epochs):
        lr = learning_rate / 5.0 if lr_decay and epoch >= epochs // 2 else learning_rate
        history.losses.append(_weighted_loss(_softmax(Z @ W.T + b), y, sample_w))

        order = rng.permutation(n) if step < n else np.arange(n)
        for s in range(0, n, step):
            idx = order[s:s + step]
            P = _softmax(Z[idx] @ W.T + b)
            G = (P - Y[idx]) * sample_w[idx, None] / sample_w[idx].sum()
            W -= lr * (G.T @ Z[idx])
            b -= lr * G.sum(axis=0)

        preds = np.argmax(Z @ W.T + b, axis=1)
        bal = balanced_accuracy(preds, y, C)
        history.balanced_accuracies.append(bal)
        if bal > best[0]:
            best = (bal, W.copy(), b.copy())
            history.best_epoch = epoch

    history.losses.append(_weighted_loss(_softmax(Z @ W.T + b), y, sample_w))
    log.debug("probe trained: best balanced accuracy %.4f at epoch %d", best[0], history.best_epoch)
    return Probe(mean, variance, best[1], best[2]), history


def train_probe(
    dataset: SyntheticDataset,
    epochs: int,
    learning_rate: float,
    **kwargs: Any,
) -> Probe:
    probe, _ = fit_probe(dataset, epochs, learning_rate, **kwargs)
    return probe


def predict_probe(probe: Probe, features) -> np.ndarray:
    """Argmax class per row; ties go to the lowest class index."""
    return np.argmax(probe.logits(features), axis=1)


# -------------------------
# Frequency key recovery (FIXED_KEY weakness)
# -------------------------
@dataclass(frozen=True)
class FrequencyAttackResult:
    key: PermutationKey
    ambiguous: bool
    min_gap: float

    def to_dict(self) -> dict[str, Any]:
        return {"key": str(self.key), "ambiguous": self.ambiguous, "min_gap": self.min_gap}


def profile_sampling_error(profile, n: int) -> float:
    """Largest binomial standard error over the 32 positions for n observed words."""
    p = np.asarray(profile, dtype=np.float64)
    return float(np.sqrt(np.max(p * (1.0 - p)) / n)) if n > 0 else float("inf")


def recover_key_from_frequencies(
    plain_profile: Sequence[float],
    cipher_profile: Sequence[float],
    sampling_error: float = 0.0,
) -> FrequencyAttackResult:
    """
    Match plaintext positions to ciphertext positions by rank of bit frequency.
    Ties are resolved by position order and reported as ambiguous.
    """
    plain = np.asarray(plain_profile, dtype=np.float64).reshape(-1)
    cipher = np.asarray(cipher_profile, dtype=np.float64).reshape(-1)
    if plain.size != WIDTH or cipher.size != WIDTH:
        raise ProfileLengthInvalid(f"Profiles must have {WIDTH} entries, got {plain.size} and {cipher.size}")

    tol = 2.0 * sampling_error
    if np.ptp(plain) <= tol:
        return FrequencyAttackResult(identity_key(), True, float(np.ptp(plain)))

    plain_order = np.argsort(plain, kind="stable")
    cipher_order = np.argsort(cipher, kind="stable")
    mapping = np.empty(WIDTH, dtype=np.int64)
    mapping[plain_order] = cipher_order

    gaps = np.concatenate([np.diff(plain[plain_order]), np.diff(cipher[cipher_order])])
    min_gap = float(gaps.min())
    return FrequencyAttackResult(
        PermutationKey(tuple(int(v) for v in mapping)),
        ambiguous=bool(min_gap <= tol),
        min_gap=min_gap,
    )


def planted_frequency_words(rng: np.random.Generator, n: int, frequencies=None) -> np.ndarray:
    """n words whose bit p is set independently with probability frequencies[p]."""
    if frequencies is None:
        frequencies = (np.arange(WIDTH) + 1) / (WIDTH + 1)
    probs = np.asarray(frequencies, dtype=np.float64)
    bits = (rng.random((n, WIDTH)) < probs).astype(np.uint8)
    return bits_to_words(bits)


# -------------------------
# End-to-end demo
# -------------------------
@dataclass(frozen=True)
class AttackSettings:
    seed: int = 2021
    count: int = 2000
    dim: int = 64
    classes: int = 2
    noise: float = 0.1
    epochs: int = 200
    learning_rate: float = 0.5
    test_fraction: float = 0.5
    attack_words: int = 100_000

    @classmethod
    def from_config(cls, cfg, **overrides: Any) -> "AttackSettings":
        base = cls(
            seed=cfg.attack_seed,
            count=cfg.attack_count,
            dim=cfg.attack_dim,
            classes=cfg.attack_classes,
            noise=cfg.attack_noise,
            epochs=cfg.probe_epochs,
            learning_rate=cfg.probe_learning_rate,
        )
        return replace(base, **{k: v for k, v in overrides.items() if v is not None})


@dataclass(frozen=True)
class HarnessReport:
    plain_balanced_accuracy: float
    cipher_balanced_accuracy: float
    fixed_key_cipher_balanced_accuracy: float
    plain_accuracy: float
    keyspace: int
    frequency_attack_result: dict[str, Any]
    roundtrip_cosine_distance: float
    seed: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for k, v in self.to_dict().items():
            if isinstance(v, dict):
                rows.extend((f"{k}.{kk}", vv) for kk, vv in v.items())
            else:
                rows.append((k, v))
        return pd.DataFrame(rows, columns=["metric", "value"])


def _probe_score(train: SyntheticDataset, test: SyntheticDataset, settings: AttackSettings) -> tuple[float, float]:
    probe = train_probe(train, settings.epochs, settings.learning_rate)
    preds = predict_probe(probe, test.features)
    return balanced_accuracy(preds, test.labels, test.classes), accuracy(preds, test.labels)


def _encrypted_view(dataset: SyntheticDataset, cipher: FeatureBatch) -> SyntheticDataset:
    return replace(dataset, features=words_to_features(cipher.words, dataset.count, dataset.dim))


def run_attack_demo(settings: Optional[AttackSettings] = None) -> HarnessReport:
    s = settings or AttackSettings()
    rng = np.random.default_rng(s.seed)
    log.info("attack demo: seed=%d count=%d dim=%d classes=%d noise=%.3f",
             s.seed, s.count, s.dim, s.classes, s.noise)

    dataset = synth_dataset(s.seed, s.count, s.dim, s.classes, s.noise)
    train_rows, test_rows = stratified_indices(
        dataset.labels, dataset.classes, s.test_fraction, s.seed
    )

    plain_bal, plain_acc = _probe_score(dataset.subset(train_rows), dataset.subset(test_rows), s)

    # demo-only secrets, reproducible from the seed
    master = MasterSecret(rng.bytes(32))
    nonce = Nonce(rng.bytes(12))
    plain_batch = FeatureBatch.from_floats(dataset.features)

    per_element = encrypt_batch(plain_batch, KeyMode.PER_ELEMENT, master, nonce)
    cipher_ds = _encrypted_view(dataset, per_element)
    cipher_bal, _ = _probe_score(cipher_ds.subset(train_rows), cipher_ds.subset(test_rows), s)

    fixed_key = PermutationKey.random(rng)
    fixed = encrypt_batch(plain_batch, KeyMode.FIXED_KEY, key=fixed_key)
    fixed_ds = _encrypted_view(dataset, fixed)
    fixed_bal, _ = _probe_score(fixed_ds.subset(train_rows), fixed_ds.subset(test_rows), s)

    restored = decrypt_batch(per_element, KeyMode.PER_ELEMENT, master, nonce)
    roundtrip = mean_cosine_distance(restored.to_floats(), dataset.features)

    attack_key = PermutationKey.random(rng)
    words = planted_frequency_words(rng, s.attack_words)
    attack_plain = FeatureBatch(words, words.size, 1)
    attack_cipher = encrypt_batch(attack_plain, KeyMode.FIXED_KEY, key=attack_key)
    plain_profile = bit_frequency_profile(attack_plain)
    result = recover_key_from_frequencies(
        plain_profile,
        bit_frequency_profile(attack_cipher),
        sampling_error=profile_sampling_error(plain_profile, s.attack_words),
    )
    attack_summary = result.to_dict() | {"recovered_exact_key": result.key == attack_key}

    report = HarnessReport(
        plain_balanced_accuracy=plain_bal,
        cipher_balanced_accuracy=cipher_bal,
        fixed_key_cipher_balanced_accuracy=fixed_bal,
        plain_accuracy=plain_acc,
        keyspace=keyspace_size(),
        frequency_attack_result=attack_summary,
        roundtrip_cosine_distance=roundtrip,
        seed=s.seed,
    )
    log.info("attack demo: plain=%.3f per-element=%.3f fixed-key=%.3f",
             plain_bal, cipher_bal, fixed_bal)
    return report
