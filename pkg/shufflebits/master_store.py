# shufflebits/master_store.py
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv, set_key

from .errors import ConfigError
from .fileio import atomic_write_bytes
from .keystream import MASTER_LEN, MasterSecret

ENV_FILE = ".env"
MASTER_ENV_KEY = "SHUFFLEBITS_MASTER"


def write_master_file(path: str | Path, secret: MasterSecret, *, overwrite: bool = False) -> Path:
    """32 raw bytes, owner-only on POSIX, written via temp file + rename."""
    path = Path(path)
    if path.exists() and not overwrite:
        raise FileExistsError(f"Refusing to overwrite existing master secret: {path}")
    atomic_write_bytes(path, secret.raw, mode=0o600)
    return path


def read_master_file(path: str | Path) -> MasterSecret:
    path = Path(path)
    data = path.read_bytes()
    if len(data) != MASTER_LEN:
        raise ConfigError(f"{path}: master secret must be {MASTER_LEN} bytes, found {len(data)}")
    return MasterSecret(data)


# -------------------------
# Dashboard-only: remember the secret *path* in .env
# -------------------------
def load_master_path_from_env(env_file: str = ENV_FILE) -> Optional[Path]:
    load_dotenv(env_file)
    raw = os.getenv(MASTER_ENV_KEY, "") or None
    if raw and Path(raw).expanduser().is_file():
        return Path(raw).expanduser()
    return None


def save_master_path_to_env(path: str | Path, env_file: str = ENV_FILE) -> None:
    # Ensure file exists
    if not os.path.exists(env_file):
        with open(env_file, "w", encoding="utf-8") as f:
            f.write(f"{MASTER_ENV_KEY}=\n")
    set_key(env_file, MASTER_ENV_KEY, str(Path(path).expanduser().resolve()))
    os.environ[MASTER_ENV_KEY] = str(Path(path).expanduser().resolve())
