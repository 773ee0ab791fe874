"""
Plot encryption and QKD figures.

Utilities to create and save the histogram, entropy, timing and noise-sweep
charts using Plotly.
"""

from pathlib import Path

import numpy as np
import pandas as pd
import plotly.graph_objects as go

from analysis_metrics import histogram
from batch_report import SUMMARY_LABEL
from image_cipher import xor_transform
from image_io import load_image, scan_dataset
from qkd_sim import DEFAULT_THRESHOLD, generate_key, sweep_channel_noise
from settings import config, load_chaos_params

DATA_DIR = config("DATA_DIR")
OUTPUT_DIR = config("OUTPUT_DIR")
DATASET_DIR = config("DATASET_DIR")

NOISE_LEVELS = [0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25]
SWEEP_PAIRS = 20_000
HISTOGRAM_IMAGE = "phantom.pgm"


def plot_histograms(original, encrypted, save_path):
    """Overlay the intensity histograms of an image and its ciphertext."""
    levels = np.arange(256)
    fig = go.Figure()
    fig.add_trace(go.Bar(x=levels, y=histogram(original), name="Original", opacity=0.6))
    fig.add_trace(go.Bar(x=levels, y=histogram(encrypted), name="Encrypted", opacity=0.6))
    fig.update_layout(
        title="Pixel Intensity Histogram",
        xaxis_title="Intensity",
        yaxis_title="Pixel count",
        barmode="overlay",
    )
    fig.write_html(save_path)
    return fig


def _image_rows(report_df):
    return report_df[report_df["image"] != SUMMARY_LABEL]


def plot_entropy_comparison(report_df, save_path):
    """Grouped bars of original, encrypted, decrypted and both baseline entropies per image."""
    rows = _image_rows(report_df)
    fig = go.Figure()
    for column, name in [
        ("OE", "Original"),
        ("EE", "Encrypted (four maps)"),
        ("DE", "Decrypted"),
        ("BaselineEE", "Encrypted (logistic only)"),
        ("ClassicalEE", "Encrypted (classical key only)"),
    ]:
        fig.add_trace(go.Bar(x=rows["image"], y=rows[column], name=name))
    fig.add_hline(y=8.0, line_dash="dot", annotation_text="8 bits")
    fig.update_layout(
        title="Shannon Entropy by Image",
        xaxis_title="Image",
        yaxis_title="Entropy (bits/pixel)",
        barmode="group",
    )
    fig.write_html(save_path)
    return fig


def plot_timings(report_df, save_path):
    rows = _image_rows(report_df)
    fig = go.Figure()
    fig.add_trace(go.Bar(x=rows["image"], y=rows["EncryptSeconds"], name="Encrypt"))
    fig.add_trace(go.Bar(x=rows["image"], y=rows["DecryptSeconds"], name="Decrypt"))
    fig.update_layout(
        title="Encryption and Decryption Time",
        xaxis_title="Image",
        yaxis_title="Seconds",
        barmode="group",
    )
    fig.write_html(save_path)
    return fig


def plot_noise_sweep(sweep_df, save_path, threshold=DEFAULT_THRESHOLD):
    """Agreement and |S| against channel noise, one line per eavesdropper setting."""
    fig = go.Figure()
    for eavesdropper, group in sweep_df.groupby("eavesdropper"):
        group = group.sort_values("p_noise")
        fig.add_trace(
            go.Scatter(x=group["p_noise"], y=group["agreement"], mode="lines+markers", name=f"Agreement ({eavesdropper})")
        )
        fig.add_trace(
            go.Scatter(
                x=group["p_noise"],
                y=group["abs_chsh"],
                mode="lines+markers",
                name=f"|S| ({eavesdropper})",
                yaxis="y2",
            )
        )
    fig.add_hline(y=threshold, line_dash="dash", annotation_text="detection threshold")
    fig.update_layout(
        title="QKD Agreement and CHSH under Channel Noise",
        xaxis_title="Bit-flip probability",
        yaxis=dict(title="Agreement", range=[0, 1.05]),
        yaxis2=dict(title="|S|", overlaying="y", side="right", range=[0, 3]),
    )
    fig.write_html(save_path)
    return fig


def noise_sweep(seed=None, pair_count=SWEEP_PAIRS):
    frames = [
        sweep_channel_noise(NOISE_LEVELS, pair_count, eavesdropper=eve, seed=seed)
        for eve in ("none", "intercept_resend")
    ]
    return pd.concat(frames, ignore_index=True)


def plot_main(data_dir: Path = DATA_DIR, dataset_dir: Path = DATASET_DIR) -> None:
    """
    Create and save all charts.

    The histogram chart encrypts the phantom sample (or the first dataset
    image). The noise sweep is recomputed and cached as noise_sweep.parquet.

    Parameters
    - data_dir: Directory holding batch_report.json.parquet; receives noise_sweep.parquet
    - dataset_dir: Directory of sample images

    Returns
    - None; the HTML charts are written to OUTPUT_DIR
    """
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    out_dir = Path(OUTPUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = config("RNG_SEED")

    report_df = pd.read_parquet(data_dir / "batch_report.json.parquet")
    plot_entropy_comparison(report_df, out_dir / "entropy_comparison.html")
    plot_timings(report_df, out_dir / "encryption_timings.html")

    image_path = Path(dataset_dir) / HISTOGRAM_IMAGE
    if not image_path.is_file():
        image_path = scan_dataset(dataset_dir)[0].path
    original = load_image(image_path)
    key = generate_key(config("KEY_LENGTH"), np.random.default_rng(seed))
    encrypted = xor_transform(original, key, load_chaos_params())
    plot_histograms(original, encrypted, out_dir / "histogram_comparison.html")

    sweep_df = noise_sweep(seed=seed)
    sweep_df.to_parquet(data_dir / "noise_sweep.parquet", index=False)
    plot_noise_sweep(sweep_df, out_dir / "noise_sweep.html", threshold=config("DETECTION_THRESHOLD"))


if __name__ == "__main__":
    plot_main(data_dir=DATA_DIR)
