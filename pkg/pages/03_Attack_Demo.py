import streamlit as st

from menu import render_menu
from shufflebits.config import load_config
from shufflebits.harness import AttackSettings, run_attack_demo

st.set_page_config(page_title="Attack Demo - ShuffleBits", layout="wide")


@st.cache_data(show_spinner=False)
def cached_attack_demo(seed: int, count: int, dim: int, noise: float, epochs: int, lr: float) -> dict:
    settings = AttackSettings(seed=seed, count=count, dim=dim, noise=noise, epochs=epochs, learning_rate=lr)
    return run_attack_demo(settings).to_dict()


def main():
    render_menu()

    cfg = load_config(st.secrets)
    st.title("🎯 Attack Demo")
    st.caption(
        "An adversary with labelled data trains a linear probe to predict a hidden attribute. "
        "Plaintext features leak it; per-element ciphertext should not."
    )

    c1, c2, c3 = st.columns(3)
    with c1:
        seed = st.number_input("Seed", value=cfg.attack_seed, step=1)
        count = st.number_input("Vectors", min_value=4, value=cfg.attack_count, step=100)
    with c2:
        dim = st.number_input("dim", min_value=1, value=cfg.attack_dim, step=1)
        noise = st.number_input("Noise scale", min_value=0.0, value=cfg.attack_noise, step=0.05, format="%.3f")
    with c3:
        epochs = st.number_input("Epochs", min_value=1, value=cfg.probe_epochs, step=10)
        lr = st.number_input("Learning rate", min_value=0.001, value=cfg.probe_learning_rate, format="%.3f")

    if not st.button("▶️ Run", type="primary"):
        return

    with st.spinner("Training probes..."):
        report = cached_attack_demo(int(seed), int(count), int(dim), float(noise), int(epochs), float(lr))

    st.divider()
    m1, m2, m3 = st.columns(3)
    m1.metric("Plaintext balanced acc.", f"{report['plain_balanced_accuracy']:.3f}")
    m2.metric("Per-element ciphertext", f"{report['cipher_balanced_accuracy']:.3f}")
    m3.metric("Fixed-key ciphertext", f"{report['fixed_key_cipher_balanced_accuracy']:.3f}")

    st.caption(
        f"Plain accuracy {report['plain_accuracy']:.3f} • round-trip cosine distance "
        f"{report['roundtrip_cosine_distance']:.2e} • key space {report['keyspace']:.2e}"
    )

    st.subheader("Fixed-key frequency attack")
    attack = report["frequency_attack_result"]
    if attack.get("recovered_exact_key"):
        st.error("The fixed key was recovered from bit frequencies alone.")
    else:
        st.warning("Exact key not recovered.")
    st.json(attack)


main()
