import streamlit as st
from shufflebits.master_ui import render_master_status


def render_menu():
    """Shared navigation menu for all pages."""
    with st.sidebar:
        st.markdown("<h1 style='margin:0;padding:0;line-height:1.0'>ShuffleBits</h1>", unsafe_allow_html=True)
        st.markdown(
            "<hr style='margin:12px 0; border: none; border-top: 1px solid #e6e6e6;'>",
            unsafe_allow_html=True,
        )

        st.page_link("streamlit_app.py", label="🔒 Encrypt / Decrypt")
        st.page_link("pages/02_Inspect_Envelope.py", label="🔎 Inspect Envelope")
        st.page_link("pages/03_Attack_Demo.py", label="🎯 Attack Demo")
        st.page_link("pages/04_Frequency_Analysis.py", label="📊 Frequency Analysis")

        st.markdown(
            "<hr style='margin:12px 0; border: none; border-top: 1px solid #e6e6e6;'>",
            unsafe_allow_html=True,
        )
        # reset guard so the panel renders once per script run
        st.session_state.pop("_master_ui_rendered_sidebar", None)
        render_master_status(location="sidebar")
