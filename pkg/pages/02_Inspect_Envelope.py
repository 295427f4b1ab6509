import pandas as pd
import streamlit as st

from menu import render_menu
from shufflebits.envelope import FILE_EXTENSION, HEADER_LEN, crc32, describe_header, read_header
from shufflebits.errors import EnvelopeError
from shufflebits.validators import validate_envelope_bytes

st.set_page_config(page_title="Inspect Envelope - ShuffleBits", layout="wide")


def main():
    render_menu()

    st.title("🔎 Inspect Envelope")
    st.caption("Header fields and integrity check. Nothing is decrypted here.")

    upload = st.file_uploader(f"Envelope ({FILE_EXTENSION})", key="inspect_upload")
    if upload is None:
        st.info("Upload an envelope to inspect it.")
        return

    data = upload.getvalue()
    try:
        header = read_header(data)
    except EnvelopeError as e:
        st.error(f"{type(e).__name__}: {e}")
        st.stop()

    info = describe_header(header)
    info["file_bytes"] = len(data)
    info["checksum_ok"] = len(data) == header.envelope_len and crc32(data[HEADER_LEN:]) == header.checksum

    ok, msg, _ = validate_envelope_bytes(data)
    if ok:
        st.success(msg)
    else:
        st.error(msg)

    st.dataframe(
        pd.DataFrame({"field": list(info.keys()), "value": [str(v) for v in info.values()]}),
        use_container_width=True,
        hide_index=True,
    )

    with st.expander("Raw header bytes", expanded=False):
        st.code(data[:HEADER_LEN].hex(" "), language=None)


main()
