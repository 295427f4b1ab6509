import streamlit as st

from menu import render_menu
from shufflebits.codec import FeatureBatch, binomial_bound, bit_frequency_profile, frequency_spread, profile_frame
from shufflebits.envelope import FILE_EXTENSION, read_envelope
from shufflebits.errors import ShuffleBitsError
from shufflebits.harness import profile_sampling_error, recover_key_from_frequencies

st.set_page_config(page_title="Frequency Analysis - ShuffleBits", layout="wide")


def main():
    render_menu()

    st.title("📊 Frequency Analysis")
    st.caption("How often each of the 32 bit positions is set in an envelope payload.")

    env_upload = st.file_uploader(f"Envelope ({FILE_EXTENSION})", key="freq_env")
    ref_upload = st.file_uploader("Plaintext reference dump (optional)", key="freq_ref")

    if env_upload is None:
        st.info("Upload an envelope to profile it.")
        return

    try:
        header, stored = read_envelope(env_upload.getvalue())
        profile = bit_frequency_profile(stored)
    except ShuffleBitsError as e:
        st.error(f"{type(e).__name__}: {e}")
        st.stop()

    n = len(stored)
    rho = float(profile.mean())
    spread = frequency_spread(profile)
    bound = 2 * binomial_bound(rho, n)

    c1, c2, c3 = st.columns(3)
    c1.metric("Mode", header.mode.to_cli())
    c2.metric("Words", f"{n:,}")
    c3.metric("Spread", f"{spread:.4f}", help=f"5σ band for a well-mixed payload: {bound:.4f}")

    if header.cascade:
        st.caption("A cascade stage was applied; this profile describes the stage output.")

    frame = profile_frame(profile)
    st.bar_chart(frame, x="position", y="frequency", color="field")

    if ref_upload is None:
        return

    st.divider()
    st.subheader("Fixed-key recovery")
    try:
        reference = FeatureBatch.from_bytes(ref_upload.getvalue(), 1)
        ref_profile = bit_frequency_profile(reference)
    except ShuffleBitsError as e:
        st.error(f"Reference: {e}")
        st.stop()

    err = max(profile_sampling_error(ref_profile, len(reference)), profile_sampling_error(profile, n))
    result = recover_key_from_frequencies(ref_profile, profile, sampling_error=err)
    if result.ambiguous:
        st.warning(f"Ambiguous ranking (min gap {result.min_gap:.5f}); the key below is one candidate.")
    else:
        st.success(f"Unambiguous ranking (min gap {result.min_gap:.5f}).")
    st.code(str(result.key), language=None)


main()
