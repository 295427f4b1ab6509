import json
import logging

import numpy as np
import pytest

from shufflebits.bitperm import PermutationKey, key_to_bytes
from shufflebits.cli import execute, main, parse_args
from shufflebits.envelope import read_envelope
from shufflebits.errors import UsageError
from shufflebits.harness import planted_frequency_words

NONCE = "000102030405060708090a0b"


@pytest.fixture
def master_file(tmp_path):
    path = tmp_path / "master.key"
    assert main(["keygen", "--out", str(path)], env={}) == 0
    return path


@pytest.fixture
def raw_file(tmp_path, rng):
    path = tmp_path / "features.bin"
    path.write_bytes(rng.standard_normal(1024).astype("<f4").tobytes())
    return path


# -------------------------
# parse_args
# -------------------------
def test_parse_keygen():
    plan = parse_args(["keygen", "--out", "master.key"])
    assert plan.subcommand == "keygen"
    assert str(plan.output_path) == "master.key"


def test_parse_encrypt():
    plan = parse_args([
        "encrypt", "--in", "f.bin", "--out", "f.shfb", "--master", "master.key",
        "--nonce", NONCE, "--mode", "per-element", "--dim", "512",
    ])
    assert plan.subcommand == "encrypt"
    assert str(plan.input_path) == "f.bin"
    assert plan.get("dim") == 512
    assert plan.get("mode") == "per-element"


@pytest.mark.parametrize(
    "argv",
    [
        ["encrypt", "--out", "f.shfb", "--nonce", NONCE, "--dim", "4"],
        ["encrypt", "--in", "f.bin", "--out", "f.shfb", "--dim", "4"],
        ["encrypt", "--in", "f", "--out", "g", "--nonce", NONCE, "--random-nonce", "--dim", "4"],
        ["encrypt", "--in", "f", "--out", "g", "--nonce", NONCE, "--dim", "0"],
        ["encrypt", "--in", "f", "--out", "g", "--nonce", NONCE, "--dim", "4", "--cascade", "xor"],
        ["keygen", "--out", "k", "--bogus"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(UsageError):
        parse_args(argv)


def test_usage_error_exit_code(capsys):
    assert main(["encrypt", "--out", "x"]) == 2
    assert "error:" in capsys.readouterr().err


# -------------------------
# keygen
# -------------------------
def test_keygen_writes_secret(master_file):
    assert len(master_file.read_bytes()) == 32


def test_keygen_refuses_overwrite(master_file, capsys):
    before = master_file.read_bytes()
    assert main(["keygen", "--out", str(master_file)], env={}) == 1
    assert master_file.read_bytes() == before
    assert main(["keygen", "--out", str(master_file), "--force"], env={}) == 0
    assert master_file.read_bytes() != before


# -------------------------
# encrypt / decrypt
# -------------------------
def test_roundtrip_one_mebibyte(tmp_path, master_file):
    src = tmp_path / "big.bin"
    src.write_bytes(np.random.default_rng(1).bytes(1 << 20))
    env_path, out_path = tmp_path / "big.shfb", tmp_path / "big.out"

    assert main([
        "encrypt", "--in", str(src), "--out", str(env_path), "--master", str(master_file),
        "--nonce", NONCE, "--mode", "per-element", "--dim", "512",
    ], env={}) == 0
    assert main([
        "decrypt", "--in", str(env_path), "--out", str(out_path), "--master", str(master_file),
    ], env={}) == 0
    assert out_path.read_bytes() == src.read_bytes()

    header, _ = read_envelope(env_path.read_bytes())
    assert (header.count, header.dim) == ((1 << 18) // 512, 512)


def test_master_from_environment(tmp_path, raw_file, master_file):
    out = tmp_path / "f.shfb"
    env = {"SHUFFLEBITS_MASTER": str(master_file)}
    assert main(["encrypt", "--in", str(raw_file), "--out", str(out), "--nonce", NONCE,
                 "--mode", "per-request", "--dim", "16"], env=env) == 0
    back = tmp_path / "f.out"
    assert main(["decrypt", "--in", str(out), "--out", str(back)], env=env) == 0
    assert back.read_bytes() == raw_file.read_bytes()


def test_missing_master_is_usage_error(tmp_path, raw_file, capsys):
    code = main(["encrypt", "--in", str(raw_file), "--out", str(tmp_path / "f.shfb"),
                 "--nonce", NONCE, "--dim", "16"], env={})
    assert code == 2
    assert "SHUFFLEBITS_MASTER" in capsys.readouterr().err


def test_fixed_mode_with_key_file(tmp_path, raw_file, rng):
    key = PermutationKey.random(rng)
    key_file = tmp_path / "fixed.key"
    key_file.write_bytes(key_to_bytes(key))
    out, back = tmp_path / "f.shfb", tmp_path / "f.out"
    assert main(["encrypt", "--in", str(raw_file), "--out", str(out), "--nonce", NONCE,
                 "--mode", "fixed", "--key-file", str(key_file), "--dim", "8"], env={}) == 0
    assert main(["decrypt", "--in", str(out), "--out", str(back), "--key", str(key)], env={}) == 0
    assert back.read_bytes() == raw_file.read_bytes()


def test_fixed_mode_needs_key(tmp_path, raw_file):
    assert main(["encrypt", "--in", str(raw_file), "--out", str(tmp_path / "f.shfb"),
                 "--nonce", NONCE, "--mode", "fixed", "--dim", "8"], env={}) == 2


@pytest.mark.parametrize("stage", ["xor", "aes-ctr"])
def test_cascade_roundtrip(tmp_path, raw_file, master_file, stage):
    stage_key = tmp_path / "stage.key"
    stage_key.write_bytes(bytes(range(32)))
    out, back = tmp_path / "f.shfb", tmp_path / "f.out"
    assert main(["encrypt", "--in", str(raw_file), "--out", str(out), "--master", str(master_file),
                 "--nonce", NONCE, "--dim", "4", "--cascade", stage,
                 "--cascade-key", str(stage_key)], env={}) == 0
    # header only says a stage was applied
    assert main(["decrypt", "--in", str(out), "--out", str(back),
                 "--master", str(master_file)], env={}) == 2
    assert main(["decrypt", "--in", str(out), "--out", str(back), "--master", str(master_file),
                 "--cascade", stage, "--cascade-key", str(stage_key)], env={}) == 0
    assert back.read_bytes() == raw_file.read_bytes()


def test_bad_input_length_leaves_no_output(tmp_path, master_file, capsys):
    src = tmp_path / "odd.bin"
    src.write_bytes(b"\x00" * 10)
    out = tmp_path / "odd.shfb"
    assert main(["encrypt", "--in", str(src), "--out", str(out), "--master", str(master_file),
                 "--nonce", NONCE, "--dim", "1"], env={}) == 1
    assert not out.exists()
    assert list(tmp_path.glob(".*.tmp")) == []
    assert "multiple of 4" in capsys.readouterr().err


def test_missing_input_names_path(tmp_path, master_file, capsys):
    missing = tmp_path / "nope.bin"
    assert main(["encrypt", "--in", str(missing), "--out", str(tmp_path / "x"),
                 "--master", str(master_file), "--nonce", NONCE, "--dim", "1"], env={}) == 1
    assert "nope.bin" in capsys.readouterr().err


def test_random_nonce_is_printed(tmp_path, raw_file, master_file, capsys):
    out = tmp_path / "f.shfb"
    assert main(["encrypt", "--in", str(raw_file), "--out", str(out), "--master", str(master_file),
                 "--random-nonce", "--dim", "4"], env={}) == 0
    printed = capsys.readouterr().out.strip().split("nonce: ")[1]
    header, _ = read_envelope(out.read_bytes())
    assert bytes(header.nonce).hex() == printed


def test_nonce_reuse_warns(tmp_path, raw_file, master_file, caplog):
    out = tmp_path / "f.shfb"
    argv = ["encrypt", "--in", str(raw_file), "--out", str(out), "--master", str(master_file),
            "--nonce", NONCE, "--dim", "4"]
    assert main(argv, env={}) == 0
    with caplog.at_level(logging.WARNING, logger="shufflebits"):
        assert main(argv, env={}) == 0
    assert any("already used" in r.getMessage() for r in caplog.records)


def test_checksum_failure_on_decrypt(tmp_path, raw_file, master_file, capsys):
    out = tmp_path / "f.shfb"
    assert main(["encrypt", "--in", str(raw_file), "--out", str(out), "--master", str(master_file),
                 "--nonce", NONCE, "--dim", "4"], env={}) == 0
    data = bytearray(out.read_bytes())
    data[-1] ^= 0xFF
    out.write_bytes(bytes(data))
    assert main(["decrypt", "--in", str(out), "--out", str(tmp_path / "x"),
                 "--master", str(master_file)], env={}) == 1
    assert "ChecksumMismatch" in capsys.readouterr().err


# -------------------------
# inspect / analyze-freq / bench / attack-demo
# -------------------------
def test_inspect_json(tmp_path, raw_file, master_file, capsys):
    out = tmp_path / "f.shfb"
    main(["encrypt", "--in", str(raw_file), "--out", str(out), "--master", str(master_file),
          "--nonce", NONCE, "--dim", "4"], env={})
    capsys.readouterr()
    assert main(["inspect", "--in", str(out), "--json"], env={}) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["mode"] == "per-element"
    assert info["nonce"] == NONCE
    assert info["count"] == 256 and info["dim"] == 4
    assert info["checksum_ok"] is True


def test_inspect_truncated(tmp_path, raw_file, master_file, capsys):
    out = tmp_path / "f.shfb"
    main(["encrypt", "--in", str(raw_file), "--out", str(out), "--master", str(master_file),
          "--nonce", NONCE, "--dim", "4"], env={})
    out.write_bytes(out.read_bytes()[:100])
    assert main(["inspect", "--in", str(out)], env={}) == 1
    assert "LengthMismatch" in capsys.readouterr().err


def test_analyze_freq_recovers_fixed_key(tmp_path, rng, capsys):
    words = planted_frequency_words(rng, 20_000)
    src = tmp_path / "plain.bin"
    src.write_bytes(words.astype("<u4").tobytes())
    key = PermutationKey.random(rng)
    out = tmp_path / "f.shfb"
    assert main(["encrypt", "--in", str(src), "--out", str(out), "--nonce", NONCE,
                 "--mode", "fixed", "--key", str(key), "--dim", "1"], env={}) == 0
    capsys.readouterr()
    assert main(["analyze-freq", "--in", str(out), "--reference", str(src), "--json"], env={}) == 0
    result = json.loads(capsys.readouterr().out)
    assert len(result["profile"]) == 32
    assert result["recovered"]["key"] == str(key)


def test_analyze_freq_table(tmp_path, raw_file, master_file, capsys):
    out = tmp_path / "f.shfb"
    main(["encrypt", "--in", str(raw_file), "--out", str(out), "--master", str(master_file),
          "--nonce", NONCE, "--dim", "4"], env={})
    capsys.readouterr()
    assert main(["analyze-freq", "--in", str(out)], env={}) == 0
    text = capsys.readouterr().out
    assert "mantissa" in text and "spread=" in text


def test_bench(capsys):
    assert main(["bench", "--words", "4096", "--repeat", "1"], env={}) == 0
    text = capsys.readouterr().out
    assert "bit-sliced" in text
    assert "words=4096" in text


def test_attack_demo_json(capsys):
    argv = ["attack-demo", "--seed", "3", "--count", "200", "--dim", "8", "--epochs", "30", "--json"]
    assert main(argv, env={}) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["seed"] == 3
    assert set(report) >= {"plain_balanced_accuracy", "cipher_balanced_accuracy", "keyspace"}


def test_attack_demo_classes_flag(capsys):
    plan = parse_args(["attack-demo", "--classes", "3"])
    assert plan.get("classes") == 3
    argv = ["attack-demo", "--seed", "5", "--count", "150", "--dim", "8", "--classes", "3",
            "--epochs", "20", "--json"]
    assert main(argv, env={}) == 0
    assert json.loads(capsys.readouterr().out)["seed"] == 5
    assert main(["attack-demo", "--count", "50", "--classes", "1"], env={}) == 1
    assert "HarnessError" in capsys.readouterr().err


def test_bad_config_is_operational_error(capsys):
    assert main(["bench", "--words", "64"], env={"SHUFFLEBITS_BENCH_WORKERS": "many"}) == 1
    assert "SHUFFLEBITS_BENCH_WORKERS" in capsys.readouterr().err


def test_execute_runs_a_parsed_plan(tmp_path):
    out = tmp_path / "m.key"
    assert execute(parse_args(["keygen", "--out", str(out)]), env={}) == 0
    assert len(out.read_bytes()) == 32
    assert execute(parse_args(["keygen", "--out", str(out)]), env={}) == 1
