import numpy as np
import streamlit as st

from menu import render_menu
from shufflebits.bitperm import key_from_text
from shufflebits.cascade import STAGE_KEY_LEN, STAGE_NAMES, make_stage
from shufflebits.codec import FeatureBatch
from shufflebits.config import load_config
from shufflebits.envelope import FILE_EXTENSION, describe_header, open_envelope, read_header, seal
from shufflebits.errors import ShuffleBitsError
from shufflebits.keystream import KeyMode, Nonce
from shufflebits.logs import configure_logging
from shufflebits.master_ui import get_master
from shufflebits.validators import validate_feature_dump

st.set_page_config(page_title="ShuffleBits", layout="wide")


# ---------------------------------------------------------
# Helpers
# ---------------------------------------------------------
def _cascade_stage(name: str, key_file):
    if name == "none":
        return None
    if key_file is None:
        st.error(f"Cascade `{name}` needs a {STAGE_KEY_LEN}-byte key file.")
        st.stop()
    return make_stage(name, key_file.getvalue())


def _preview(batch: FeatureBatch, rows: int = 5):
    if batch.count == 0:
        st.caption("(empty batch)")
        return
    st.dataframe(np.asarray(batch.to_floats()[:rows], dtype=np.float64), use_container_width=True)


# ---------------------------------------------------------
# Page
# ---------------------------------------------------------
def main():
    render_menu()

    cfg = load_config(st.secrets)
    configure_logging(cfg.log_level)

    st.title("🔒 Encrypt / Decrypt")
    st.caption("Bit-permutation encryption of raw little-endian binary32 feature dumps.")

    master = get_master()
    modes = ["per-element", "per-request", "fixed"]

    # ------------------------------ ENCRYPT ------------------------------
    st.divider()
    st.subheader("1️⃣ Encrypt a feature dump")

    upload = st.file_uploader("Raw feature dump (.bin)", type=None, key="plain_upload")
    c1, c2, c3 = st.columns(3)
    with c1:
        dim = st.number_input("dim", min_value=1, value=cfg.attack_dim, step=1)
    with c2:
        default_mode = cfg.default_mode if cfg.default_mode in modes else "per-element"
        mode_name = st.selectbox("Key mode", modes, index=modes.index(default_mode))
    with c3:
        cascade_name = st.selectbox("Cascade stage", STAGE_NAMES, index=0, key="enc_cascade")

    nonce_hex = st.text_input("Nonce (24 hex, blank = random)", value="")
    key_text = ""
    if mode_name == "fixed":
        key_text = st.text_input("Fixed key (32 comma-separated positions)")
    cascade_key = None
    if cascade_name != "none":
        cascade_key = st.file_uploader("Cascade key file", key="enc_cascade_key")

    if st.button("🔒 Encrypt", type="primary", disabled=upload is None):
        data = upload.getvalue()
        ok, msg, count = validate_feature_dump(data, int(dim))
        if not ok:
            st.error(msg)
            st.stop()
        st.info(f"{count} vectors × {int(dim)} • {msg}")

        mode = KeyMode.from_cli(mode_name)
        if mode != KeyMode.FIXED_KEY and master is None:
            st.error("Select or generate a master secret in the sidebar first.")
            st.stop()
        try:
            nonce = Nonce.from_hex(nonce_hex) if nonce_hex.strip() else Nonce.random()
            key = key_from_text(key_text) if mode == KeyMode.FIXED_KEY else None
            stage = _cascade_stage(cascade_name, cascade_key)
            batch = FeatureBatch.from_bytes(data, int(dim))
            envelope = seal(batch, mode, nonce, master, key=key, stage=stage)
        except (ShuffleBitsError, ValueError) as e:
            st.error(f"Encryption failed: {e}")
            st.stop()

        st.success(f"Encrypted with nonce `{nonce.hex()}`")
        st.json(describe_header(read_header(envelope)))
        name = (upload.name.rsplit(".", 1)[0] or "features") + FILE_EXTENSION
        st.download_button("⬇️ Download envelope", envelope, file_name=name, mime="application/octet-stream")

    # ------------------------------ DECRYPT ------------------------------
    st.divider()
    st.subheader("2️⃣ Decrypt an envelope")

    env_upload = st.file_uploader(f"Envelope ({FILE_EXTENSION})", key="env_upload")
    dec_key_text = st.text_input("Fixed key (only for fixed-mode envelopes)", key="dec_key")
    dec_cascade = st.selectbox("Cascade stage used on encrypt", STAGE_NAMES, index=0, key="dec_cascade")
    dec_cascade_key = None
    if dec_cascade != "none":
        dec_cascade_key = st.file_uploader("Cascade key file", key="dec_cascade_key")

    if st.button("🔓 Decrypt", disabled=env_upload is None):
        data = env_upload.getvalue()
        try:
            header = read_header(data)
            key = key_from_text(dec_key_text) if header.mode == KeyMode.FIXED_KEY else None
            if header.mode != KeyMode.FIXED_KEY and master is None:
                st.error("Select the master secret used for this envelope in the sidebar.")
                st.stop()
            stage = _cascade_stage(dec_cascade, dec_cascade_key)
            header, plain = open_envelope(data, master, key=key, stage=stage)
        except (ShuffleBitsError, ValueError) as e:
            st.error(f"Decryption failed: {e}")
            st.stop()

        st.success(f"Decrypted {header.count} vectors × {header.dim} ({header.mode.to_cli()})")
        _preview(plain)
        st.download_button("⬇️ Download features", plain.to_bytes(), file_name="features.bin",
                           mime="application/octet-stream")


main()
