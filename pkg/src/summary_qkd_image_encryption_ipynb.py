# %%
"""
# QKD-Keyed Chaotic Image Encryption Summary

Evaluation of the four-map chaotic XOR cipher keyed by a simulated E91 session,
over the synthetic grayscale dataset.
"""

# %%
import sys
sys.path.insert(0, "./src")

import json

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

import chartbook

from analysis_metrics import histogram
from image_cipher import xor_transform
from image_io import load_image
from qkd_sim import generate_key
from settings import config, load_chaos_params

BASE_DIR = chartbook.env.get_project_root()
DATA_DIR = BASE_DIR / "_data"
DATASET_DIR = config("DATASET_DIR")

# %%
"""
## Method

Each pixel is XOR-ed with four keystream bytes, one per chaotic map:

$$
C_i = P_i \\oplus L_i \\oplus H_i \\oplus T_i \\oplus A_i
$$

where the keystreams come from the logistic, Henon, tent and Arnold cat maps,
whitened as $\\lfloor \\mathrm{frac}(|x| \\cdot 10^6) \\cdot 256 \\rfloor$.
The six initial conditions are derived from a key $K' = K \\oplus K_1$, the XOR of a
classical key and a key established by an E91 session. Decryption is the same
operation.

Eavesdropping is flagged when the agreement between Alice's and Bob's tested
sifted bits falls below the threshold (80% by default).
"""

# %%
"""
## Key Establishment
"""

# %%
for name in ["classical_key.json", "quantum_key.json", "combined_key.json"]:
    path = DATA_DIR / name
    if not path.exists():
        continue
    document = json.loads(path.read_text())
    print(f"{name}: {document['length']} bits, id {document['key_id']}")
    stats = document.get("session_stats")
    if stats:
        print(f"  pairs={stats['pair_count']:,} sifted={stats['sifted_length']:,} "
              f"agreement={stats['agreement']:.4f} S={stats['chsh_s']:+.4f} "
              f"detected={stats['eavesdrop_detected']}")

# %%
"""
## Batch Report
"""

# %%
df = pd.read_parquet(DATA_DIR / "batch_report.json.parquet")
df

# %%
images = df[df["image"] != "summary"]
print(f"Images: {len(images)}")
print(f"Lossless round trips: {(images['BER'] == 0.0).sum()} / {len(images)}")
print(f"Min encrypted entropy: {images['EE'].min():.4f}")
print(f"Max |key sensitivity SSIM|: {images['KeySensitivity'].abs().max():.4f}")

# %%
"""
## Entropy: Four Maps versus Logistic Only
"""

# %%
entropy_long = images.melt(
    id_vars="image",
    value_vars=["OE", "EE", "BaselineEE", "ClassicalEE"],
    var_name="measure",
    value_name="entropy",
)
fig, ax = plt.subplots(figsize=(10, 5))
sns.barplot(data=entropy_long, x="image", y="entropy", hue="measure", ax=ax)
ax.axhline(8.0, linestyle=":", color="gray")
ax.set_ylabel("bits / pixel")
ax.set_title("Shannon entropy by image")
plt.tight_layout()
plt.show()

# %%
"""
## Histograms
"""

# %%
original = load_image(DATASET_DIR / "phantom.pgm")
key = generate_key(config("KEY_LENGTH"), np.random.default_rng(config("RNG_SEED")))
encrypted = xor_transform(original, key, load_chaos_params())

fig, axes = plt.subplots(2, 2, figsize=(12, 8))
axes[0, 0].imshow(original.pixels, cmap="gray", vmin=0, vmax=255)
axes[0, 0].set_title("Original")
axes[0, 1].imshow(encrypted.pixels, cmap="gray", vmin=0, vmax=255)
axes[0, 1].set_title("Encrypted")
axes[1, 0].bar(np.arange(256), histogram(original), width=1.0)
axes[1, 1].bar(np.arange(256), histogram(encrypted), width=1.0)
for ax in axes[0]:
    ax.axis("off")
plt.tight_layout()
plt.show()

# %%
"""
## Channel Noise Sweep
"""

# %%
sweep_path = DATA_DIR / "noise_sweep.parquet"
if sweep_path.exists():
    sweep = pd.read_parquet(sweep_path)
    fig, axes = plt.subplots(1, 2, figsize=(12, 4))
    sns.lineplot(data=sweep, x="p_noise", y="agreement", hue="eavesdropper", marker="o", ax=axes[0])
    axes[0].axhline(config("DETECTION_THRESHOLD"), linestyle="--", color="red")
    sns.lineplot(data=sweep, x="p_noise", y="abs_chsh", hue="eavesdropper", marker="o", ax=axes[1])
    axes[1].axhline(2.0, linestyle=":", color="gray")
    axes[1].axhline(2 * np.sqrt(2), linestyle=":", color="gray")
    plt.tight_layout()
    plt.show()

# %%
"""
## Data Definitions

### Batch Report (batch_report.json)

| Variable | Description |
|----------|-------------|
| image | File name, or `summary` for the mean row |
| PSNR, SSIM, NCC, BER | Original vs decrypted quality (∞, 1, 1, 0 for a lossless round trip) |
| KeySensitivity | SSIM of the original against a decryption with one key bit flipped |
| OE, EE, DE | Entropy of original, encrypted and decrypted image (bits/pixel) |
| Pearson(O&D) | Pearson correlation of original and decrypted pixels |
| EavesdropDetected | Verdict of the QKD session that supplied the key |
| EncryptSeconds, DecryptSeconds | Wall-clock time, informational |
| BaselineEE | Encrypted entropy with the logistic map alone |
| ClassicalEE | Encrypted entropy with the classical key alone, no QKD key |
| Agreement, CHSH | Tested sifted-bit agreement and CHSH statistic of the session |
"""
