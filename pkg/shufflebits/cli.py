# shufflebits/cli.py
"""
Command-line front end.

  shufflebits keygen      --out master.key
  shufflebits encrypt     --in f.bin --out f.shfb --master master.key --nonce <24 hex> --mode per-element --dim 512
  shufflebits decrypt     --in f.shfb --out f.bin --master master.key
  shufflebits inspect     --in f.shfb
  shufflebits bench       --words 65536
  shufflebits attack-demo --seed 2021
  shufflebits analyze-freq --in f.shfb [--reference f.bin]

Exit codes: 0 ok, 1 operational error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from .bitperm import WIDTH, PermutationKey, key_from_bytes, key_from_text
from .cascade import STAGE_KEY_LEN, STAGE_NAMES, make_stage
from .codec import (
    FeatureBatch,
    bit_frequency_profile,
    encrypt_batch,
    encrypt_batch_bitsliced,
    frequency_spread,
    profile_frame,
)
from .config import ShuffleBitsConfig, load_config
from .envelope import (
    HEADER_LEN,
    crc32,
    describe_header,
    open_envelope,
    read_envelope,
    read_header,
    seal,
)
from .errors import ConfigError, DimensionMismatch, LengthMismatch, ShuffleBitsError, UsageError
from .fileio import atomic_write_bytes
from .harness import (
    AttackSettings,
    profile_sampling_error,
    recover_key_from_frequencies,
    run_attack_demo,
)
from .keystream import KeyMode, MasterSecret, Nonce, generate_master
from .logs import configure_logging, get_logger
from .master_store import read_master_file, write_master_file
from .validators import validate_feature_dump

log = get_logger(__name__)

MODE_CHOICES = ("fixed", "per-request", "per-element")


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits on bad input; raise instead so execute/main own the exit code."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class CommandPlan:
    subcommand: str
    options: dict[str, Any] = field(default_factory=dict)
    input_path: Optional[Path] = None
    output_path: Optional[Path] = None

    def get(self, name: str, default: Any = None) -> Any:
        return self.options.get(name, default)


# ---------------------------------------------------------
# Parsing
# ---------------------------------------------------------
def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a value >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="shufflebits",
        description="Bit-permutation encryption for binary32 feature vectors.",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default), ERROR.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_ArgumentParser)

    # keygen
    p = sub.add_parser("keygen", help="Write a new 32-byte master secret.")
    p.add_argument("--out", required=True, help="Path of the secret file.")
    p.add_argument("--force", action="store_true", help="Overwrite an existing file.")

    # encrypt
    p = sub.add_parser("encrypt", help="Encrypt a raw little-endian binary32 dump into a .shfb envelope.")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--master", default=None, help="Master secret file (or $SHUFFLEBITS_MASTER).")
    nonce = p.add_mutually_exclusive_group(required=True)
    nonce.add_argument("--nonce", default=None, help="24 hex characters.")
    nonce.add_argument("--random-nonce", action="store_true", help="Draw a nonce and print it.")
    p.add_argument("--mode", choices=MODE_CHOICES, default=None)
    p.add_argument("--dim", type=_positive_int, required=True)
    _add_key_args(p)
    p.add_argument("--cascade", choices=STAGE_NAMES, default="none")
    p.add_argument("--cascade-key", default=None, help=f"File holding the {STAGE_KEY_LEN}-byte stage key.")
    p.add_argument("--workers", type=_positive_int, default=1)

    # decrypt
    p = sub.add_parser("decrypt", help="Decrypt a .shfb envelope back to the raw dump.")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--master", default=None)
    _add_key_args(p)
    p.add_argument("--cascade", choices=STAGE_NAMES, default=None,
                   help="Stage that was applied on encrypt (the header only records that one was).")
    p.add_argument("--cascade-key", default=None)
    p.add_argument("--workers", type=_positive_int, default=1)

    # inspect
    p = sub.add_parser("inspect", help="Print envelope header fields without decrypting.")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--json", action="store_true")

    # bench
    p = sub.add_parser("bench", help="Scalar vs bit-sliced throughput on generated words.")
    p.add_argument("--words", type=_positive_int, default=None)
    p.add_argument("--workers", type=_positive_int, default=None)
    p.add_argument("--repeat", type=_positive_int, default=3)
    p.add_argument("--seed", type=int, default=0)

    # attack-demo
    p = sub.add_parser("attack-demo", help="Train the adversary probe on plaintext and ciphertext.")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--count", type=_positive_int, default=None)
    p.add_argument("--dim", type=_positive_int, default=None)
    p.add_argument("--classes", type=_positive_int, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--epochs", type=_positive_int, default=None)
    p.add_argument("--json", action="store_true")

    # analyze-freq
    p = sub.add_parser("analyze-freq", help="Per-position bit frequencies of an envelope payload.")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--reference", default=None, help="Raw plaintext dump; runs fixed-key recovery.")
    p.add_argument("--json", action="store_true")

    return parser


def _add_key_args(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--key", default=None, help="Fixed-mode key: 32 comma-separated positions.")
    group.add_argument("--key-file", default=None, help="Fixed-mode key file (text or 32 raw bytes).")


def parse_args(argv: Optional[Sequence[str]] = None) -> CommandPlan:
    ns = build_parser().parse_args(list(sys.argv[1:] if argv is None else argv))
    options = vars(ns).copy()
    subcommand = options.pop("subcommand")
    input_path = options.pop("input", None)
    output_path = options.get("out")

    if subcommand == "encrypt" and options.get("cascade") != "none" and not options.get("cascade_key"):
        raise UsageError(f"--cascade {options['cascade']} needs --cascade-key")

    return CommandPlan(
        subcommand=subcommand,
        options=options,
        input_path=Path(input_path) if input_path else None,
        output_path=Path(output_path) if output_path else None,
    )


# ---------------------------------------------------------
# Helpers
# ---------------------------------------------------------
def _read(path: Path) -> bytes:
    return Path(path).read_bytes()


def _resolve_master(plan: CommandPlan, cfg: ShuffleBitsConfig) -> MasterSecret:
    path = plan.get("master") or cfg.master_path
    if not path:
        raise UsageError("a master secret is required: pass --master or set SHUFFLEBITS_MASTER")
    return read_master_file(path)


def _resolve_key(plan: CommandPlan) -> Optional[PermutationKey]:
    if plan.get("key"):
        return key_from_text(plan.get("key"))
    if plan.get("key_file"):
        raw = _read(Path(plan.get("key_file")))
        if len(raw) == WIDTH:
            return key_from_bytes(raw)
        return key_from_text(raw.decode("ascii", errors="replace"))
    return None


def _resolve_stage(name: Optional[str], key_path: Optional[str]):
    if not name or name == "none":
        return None
    if not key_path:
        raise UsageError(f"--cascade {name} needs --cascade-key")
    raw = _read(Path(key_path))
    if len(raw) != STAGE_KEY_LEN:
        raise ConfigError(f"{key_path}: cascade key must be {STAGE_KEY_LEN} bytes, found {len(raw)}")
    return make_stage(name, raw)


def _warn_on_nonce_reuse(out: Path, nonce: Nonce) -> None:
    try:
        with open(out, "rb") as f:
            head = f.read(HEADER_LEN)
        existing = read_header(head)
    except (OSError, ShuffleBitsError):
        return
    if bytes(existing.nonce) == nonce.raw:
        log.warning("nonce %s is already used by %s; reusing a nonce repeats every derived key",
                    nonce.hex(), out)


def _print_table(frame: pd.DataFrame) -> None:
    print(frame.to_string(index=False))


# ---------------------------------------------------------
# Subcommands
# ---------------------------------------------------------
def _cmd_keygen(plan: CommandPlan, cfg: ShuffleBitsConfig) -> int:
    path = write_master_file(plan.output_path, generate_master(), overwrite=bool(plan.get("force")))
    print(f"wrote master secret to {path}")
    return 0


def _cmd_encrypt(plan: CommandPlan, cfg: ShuffleBitsConfig) -> int:
    mode = KeyMode.from_cli(plan.get("mode") or cfg.default_mode)
    try:
        nonce = Nonce.random() if plan.get("random_nonce") else Nonce.from_hex(plan.get("nonce"))
    except ValueError as e:
        raise UsageError(str(e)) from e

    key = _resolve_key(plan)
    if mode == KeyMode.FIXED_KEY:
        if key is None:
            raise UsageError("--mode fixed needs --key or --key-file")
        master = None
    else:
        if key is not None:
            raise UsageError(f"--mode {mode.to_cli()} derives its keys; drop --key/--key-file")
        master = _resolve_master(plan, cfg)
    stage = _resolve_stage(plan.get("cascade"), plan.get("cascade_key"))

    data = _read(plan.input_path)
    ok, msg, _ = validate_feature_dump(data, plan.get("dim"))
    if not ok:
        raise DimensionMismatch(f"{plan.input_path}: {msg}")
    batch = FeatureBatch.from_bytes(data, plan.get("dim"))

    if plan.get("random_nonce"):
        print(f"nonce: {nonce.hex()}")
    else:
        _warn_on_nonce_reuse(plan.output_path, nonce)

    envelope = seal(batch, mode, nonce, master, key=key, stage=stage, workers=plan.get("workers", 1))
    atomic_write_bytes(plan.output_path, envelope)
    log.info("wrote %s (%d bytes)", plan.output_path, len(envelope))
    return 0


def _cmd_decrypt(plan: CommandPlan, cfg: ShuffleBitsConfig) -> int:
    data = _read(plan.input_path)
    header = read_header(data)

    master = key = stage = None
    if header.mode == KeyMode.FIXED_KEY:
        key = _resolve_key(plan)
        if key is None:
            raise UsageError("fixed-mode envelope: pass the encryption key with --key or --key-file")
    else:
        master = _resolve_master(plan, cfg)
    if header.cascade:
        if not plan.get("cascade") or plan.get("cascade") == "none":
            raise UsageError("envelope has a cascade stage applied: pass --cascade and --cascade-key")
        stage = _resolve_stage(plan.get("cascade"), plan.get("cascade_key"))

    _, plain = open_envelope(data, master, key=key, stage=stage, workers=plan.get("workers", 1))
    atomic_write_bytes(plan.output_path, plain.to_bytes())
    log.info("wrote %s (%d words)", plan.output_path, len(plain))
    return 0


def _cmd_inspect(plan: CommandPlan, cfg: ShuffleBitsConfig) -> int:
    data = _read(plan.input_path)
    header = read_header(data)
    if len(data) != header.envelope_len:
        raise LengthMismatch(
            f"{plan.input_path}: {len(data)} bytes, header declares {header.envelope_len}"
        )
    info = describe_header(header)
    info["checksum_ok"] = crc32(data[HEADER_LEN:]) == header.checksum

    if plan.get("json"):
        print(json.dumps(info, indent=2))
    else:
        width = max(len(k) for k in info)
        for k, v in info.items():
            print(f"{k:<{width}}  {v}")
    return 0


def _best_rate(fn, n_words: int, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return n_words / best if best > 0 else float("inf")


def _cmd_bench(plan: CommandPlan, cfg: ShuffleBitsConfig) -> int:
    n = plan.get("words") or cfg.bench_words
    workers = plan.get("workers") or cfg.bench_workers
    repeat = plan.get("repeat") or 3
    rng = np.random.default_rng(plan.get("seed", 0))

    words = rng.integers(0, 1 << 32, size=n, dtype=np.uint32)
    batch = FeatureBatch(words, n, 1)
    key = PermutationKey.random(rng)
    master = MasterSecret(rng.bytes(32))
    nonce = Nonce(rng.bytes(12))

    scalar = encrypt_batch(batch, KeyMode.FIXED_KEY, key=key, workers=workers)
    sliced = encrypt_batch_bitsliced(batch, key, workers=workers)
    if scalar != sliced:
        raise ShuffleBitsError("bit-sliced output differs from the reference path")

    rows = [
        ("scalar (fixed key)", _best_rate(
            lambda: encrypt_batch(batch, KeyMode.FIXED_KEY, key=key, workers=workers), n, repeat)),
        ("bit-sliced (fixed key)", _best_rate(
            lambda: encrypt_batch_bitsliced(batch, key, workers=workers), n, repeat)),
        ("scalar (per-element)", _best_rate(
            lambda: encrypt_batch(batch, KeyMode.PER_ELEMENT, master, nonce, workers=workers), n, repeat)),
    ]
    frame = pd.DataFrame(rows, columns=["path", "words_per_second"])
    frame["words_per_second"] = frame["words_per_second"].round(0)
    print(f"words={n} workers={workers} repeat={repeat}")
    _print_table(frame)
    return 0


def _cmd_attack_demo(plan: CommandPlan, cfg: ShuffleBitsConfig) -> int:
    settings = AttackSettings.from_config(
        cfg,
        seed=plan.get("seed"),
        count=plan.get("count"),
        dim=plan.get("dim"),
        classes=plan.get("classes"),
        noise=plan.get("noise"),
        epochs=plan.get("epochs"),
    )
    report = run_attack_demo(settings)
    if plan.get("json"):
        print(report.to_json())
    else:
        _print_table(report.to_frame())
    return 0


def _cmd_analyze_freq(plan: CommandPlan, cfg: ShuffleBitsConfig) -> int:
    header, stored = read_envelope(_read(plan.input_path))
    if len(stored) == 0:
        raise DimensionMismatch(f"{plan.input_path}: envelope payload is empty")
    if header.cascade:
        log.warning("payload has a cascade stage applied; the profile describes the stage output")
    profile = bit_frequency_profile(stored)
    result: dict[str, Any] = {
        "mode": header.mode.to_cli(),
        "words": len(stored),
        "spread": frequency_spread(profile),
        "profile": [float(p) for p in profile],
    }

    if plan.get("reference"):
        ref_path = Path(plan.get("reference"))
        reference = FeatureBatch.from_bytes(_read(ref_path), 1)
        if len(reference) == 0:
            raise DimensionMismatch(f"{ref_path}: reference dump is empty")
        ref_profile = bit_frequency_profile(reference)
        err = max(profile_sampling_error(ref_profile, len(reference)),
                  profile_sampling_error(profile, len(stored)))
        attack = recover_key_from_frequencies(ref_profile, profile, sampling_error=err)
        result["recovered"] = attack.to_dict()

    if plan.get("json"):
        print(json.dumps(result, indent=2))
        return 0

    print(f"mode={result['mode']} words={result['words']} spread={result['spread']:.6f}")
    _print_table(profile_frame(profile))
    if "recovered" in result:
        rec = result["recovered"]
        print(f"recovered key: {rec['key']}")
        print(f"ambiguous: {rec['ambiguous']} (min gap {rec['min_gap']:.6f})")
    return 0


_HANDLERS = {
    "keygen": _cmd_keygen,
    "encrypt": _cmd_encrypt,
    "decrypt": _cmd_decrypt,
    "inspect": _cmd_inspect,
    "bench": _cmd_bench,
    "attack-demo": _cmd_attack_demo,
    "analyze-freq": _cmd_analyze_freq,
}


def _describe_os_error(e: OSError) -> str:
    if e.filename:
        return f"{e.filename}: {e.strerror or e}"
    return str(e)


def execute(plan: CommandPlan, env: Optional[Mapping[str, str]] = None) -> int:
    try:
        cfg = load_config(os.environ if env is None else env)
        configure_logging(plan.get("log_level") or cfg.log_level)
        return _HANDLERS[plan.subcommand](plan, cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return UsageError.exit_code
    except FileExistsError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {_describe_os_error(e)}", file=sys.stderr)
        return 1
    except (ShuffleBitsError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None, env: Optional[Mapping[str, str]] = None) -> int:
    try:
        plan = parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return UsageError.exit_code
    return execute(plan, env)
