# shufflebits/fileio.py
"""Atomic output files: write to a sibling temp file, fsync, then os.replace."""
import os
import secrets
from pathlib import Path

from .logs import get_logger

log = get_logger(__name__)


def _fsync_dir_best_effort(dir_path: Path) -> None:
    if os.name != "posix":
        return
    try:
        fd = os.open(str(dir_path), os.O_RDONLY)
    except OSError:
        return
    try:
        os.fsync(fd)
    except OSError:
        pass
    finally:
        os.close(fd)


def _unlink_best_effort(p: Path) -> None:
    try:
        p.unlink()
    except OSError:
        pass


def atomic_write_bytes(path: str | Path, data: bytes, *, mode: int = 0o644) -> Path:
    """
    No partial file is ever visible at `path`: either the old content or the
    complete new content. The temp file is removed on any failure.
    """
    final_path = Path(path)
    parent = final_path.parent if str(final_path.parent) else Path(".")
    tmp_path = parent / f".{final_path.name}.{secrets.token_hex(8)}.tmp"

    flags = os.O_WRONLY | os.O_CREAT | os.O_EXCL | getattr(os, "O_NOFOLLOW", 0)
    fd = os.open(str(tmp_path), flags, mode if os.name == "posix" else 0o666)
    try:
        with os.fdopen(fd, "wb", closefd=True) as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        if os.name == "posix":
            os.chmod(tmp_path, mode)
        os.replace(tmp_path, final_path)
    except BaseException:
        _unlink_best_effort(tmp_path)
        raise
    _fsync_dir_best_effort(final_path.parent)
    log.debug("wrote %d bytes to %s", len(data), final_path)
    return final_path
