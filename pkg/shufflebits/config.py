# shufflebits/config.py
import os
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError


@dataclass
class ShuffleBitsConfig:
    master_path: Optional[Path]
    log_level: str
    default_mode: str

    # Attack harness (desk-scale synthetic task)
    attack_seed: int
    attack_count: int
    attack_dim: int
    attack_classes: int
    attack_noise: float
    probe_epochs: int
    probe_learning_rate: float

    # Bench
    bench_words: int
    bench_workers: int


def _get(s: Mapping[str, Any], key: str, default: Any) -> Any:
    try:
        value = s.get(key, default)
    except Exception:
        value = default
    if isinstance(value, str) and not value.strip():
        return default
    return value


def _as_int(s: Mapping[str, Any], key: str, default: int) -> int:
    raw = _get(s, key, default)
    try:
        return int(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from e


def _as_float(s: Mapping[str, Any], key: str, default: float) -> float:
    raw = _get(s, key, default)
    try:
        return float(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from e


def load_config(source: Optional[Mapping[str, Any]] = None) -> ShuffleBitsConfig:
    """
    Build the runtime config from a string mapping.
    CLI: os.environ (default). Dashboard: st.secrets.
    """
    s = os.environ if source is None else source

    master = _get(s, "SHUFFLEBITS_MASTER", None)
    return ShuffleBitsConfig(
        master_path=Path(str(master)).expanduser() if master else None,
        log_level=str(_get(s, "SHUFFLEBITS_LOG_LEVEL", "WARNING")).upper(),
        default_mode=str(_get(s, "SHUFFLEBITS_DEFAULT_MODE", "per-element")),

        attack_seed=_as_int(s, "SHUFFLEBITS_ATTACK_SEED", 2021),
        attack_count=_as_int(s, "SHUFFLEBITS_ATTACK_COUNT", 2000),
        attack_dim=_as_int(s, "SHUFFLEBITS_ATTACK_DIM", 64),
        attack_classes=_as_int(s, "SHUFFLEBITS_ATTACK_CLASSES", 2),
        attack_noise=_as_float(s, "SHUFFLEBITS_ATTACK_NOISE", 0.1),
        probe_epochs=_as_int(s, "SHUFFLEBITS_PROBE_EPOCHS", 200),
        probe_learning_rate=_as_float(s, "SHUFFLEBITS_PROBE_LR", 0.5),

        bench_words=_as_int(s, "SHUFFLEBITS_BENCH_WORDS", 1 << 16),
        bench_workers=_as_int(s, "SHUFFLEBITS_BENCH_WORKERS", 1),
    )
