import streamlit as st
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .keystream import MasterSecret, generate_master
from .master_store import (
    load_master_path_from_env,
    read_master_file,
    save_master_path_to_env,
    write_master_file,
)

_SESSION_PATH_KEY = "shufflebits_master_path"


def current_master_path() -> Optional[Path]:
    """Session value first, then the path remembered in .env."""
    raw = st.session_state.get(_SESSION_PATH_KEY)
    if raw:
        return Path(raw)
    remembered = load_master_path_from_env()
    if remembered:
        st.session_state[_SESSION_PATH_KEY] = str(remembered)
    return remembered


def get_master() -> Optional[MasterSecret]:
    path = current_master_path()
    if path is None:
        return None
    try:
        return read_master_file(path)
    except (OSError, ConfigError):
        return None


def render_master_status(location="sidebar"):
    """
    Master-secret panel.
    - Shows which secret file is active (path only, never the bytes)
    - Load an existing file or generate a new one
    - Remembers the path in .env
    """
    container = st.sidebar if location == "sidebar" else st

    # Guard to prevent duplicate rendering in same run
    guard_key = f"_master_ui_rendered_{location}"
    if st.session_state.get(guard_key, False):
        return
    st.session_state[guard_key] = True

    container.markdown("### 🔑 Master secret")

    path = current_master_path()
    if path and get_master() is not None:
        container.success(f"Loaded `{path.name}`")
        container.caption(str(path))
    elif path:
        container.error(f"`{path}` is missing or not a 32-byte secret")
    else:
        container.warning("No master secret selected")

    with container.expander("Change", expanded=path is None):
        new_path = st.text_input("Secret file", value=str(path or "master.key"), key=f"master_path_{location}")
        c1, c2 = st.columns(2)
        if c1.button("📂 Use file", key=f"master_use_{location}", use_container_width=True):
            try:
                read_master_file(new_path)
                save_master_path_to_env(new_path)
                st.session_state[_SESSION_PATH_KEY] = str(Path(new_path).expanduser().resolve())
                st.rerun()
            except (OSError, ConfigError) as e:
                st.error(f"Cannot use {new_path}: {e}")
        if c2.button("✨ Generate", key=f"master_gen_{location}", use_container_width=True):
            try:
                written = write_master_file(new_path, generate_master())
                save_master_path_to_env(written)
                st.session_state[_SESSION_PATH_KEY] = str(written.expanduser().resolve())
                st.toast("New master secret written.")
                st.rerun()
            except FileExistsError as e:
                st.error(str(e))
            except OSError as e:
                st.error(f"Write failed: {e}")
