"""
Batch evaluation over a dataset of grayscale images.

For every image a QKD session supplies the quantum key, which is combined
with a fresh classical key; the image is encrypted, decrypted and scored.
One row per image, plus a summary row:

    PSNR, SSIM, NCC, BER, KeySensitivity   quality of the round trip
    OE, EE, DE                             entropy of original/encrypted/decrypted
    Pearson(O&D)                           original vs decrypted correlation
    EavesdropDetected                      verdict of the QKD session
    EncryptSeconds, DecryptSeconds         informational timings
    BaselineEE                             entropy under the logistic-only cipher
    ClassicalEE                            entropy with the classical key alone (no QKD)

Metrics that are undefined for an image (NCC of an all-black image, SSIM of
a single pixel) are recorded as NaN and written as null in the JSON report.
"""

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from pathlib import Path

import numpy as np
import pandas as pd

from analysis_metrics import build_report, defined_or_nan, entropy, key_sensitivity
from atomic_io import atomic_write_text, atomic_write_with
from errors import DatasetError
from image_cipher import xor_transform
from image_io import load_image, scan_dataset
from qkd_sim import (
    ChannelConfig,
    combine_keys,
    generate_key,
    key_material,
    pairs_for_key,
    run_e91_session,
)
from settings import RunConfig, config, load_chaos_params

DATA_DIR = config("DATA_DIR")
DATASET_DIR = config("DATASET_DIR")

COLUMNS = [
    "image",
    "width",
    "height",
    "PSNR",
    "SSIM",
    "NCC",
    "BER",
    "KeySensitivity",
    "OE",
    "EE",
    "DE",
    "Pearson(O&D)",
    "EavesdropDetected",
    "EncryptSeconds",
    "DecryptSeconds",
    "BaselineEE",
    "ClassicalEE",
    "Agreement",
    "CHSH",
]
SUMMARY_LABEL = "summary"


def process_image(path, run_config, seed):
    """Full pipeline for one image; returns its report row."""
    image = load_image(path)
    rng = np.random.default_rng(seed)
    params = run_config.chaos

    pairs = run_config.pair_count or pairs_for_key(run_config.key_length, run_config.sacrifice_fraction)
    session = run_e91_session(pairs, run_config.channel, rng, run_config.sacrifice_fraction)
    quantum_key = key_material(session, run_config.key_length)
    classical_key = generate_key(run_config.key_length, rng)
    key = combine_keys(classical_key, quantum_key)

    start = time.perf_counter()
    encrypted = xor_transform(image, key, params)
    encrypt_seconds = time.perf_counter() - start
    start = time.perf_counter()
    decrypted = xor_transform(encrypted, key, params)
    decrypt_seconds = time.perf_counter() - start

    flip_index = int(rng.integers(key.length))
    sensitivity = defined_or_nan(key_sensitivity, image, key, params, flip_index)
    report = build_report(image, encrypted, decrypted, session, sensitivity, strict=False)
    baseline = xor_transform(image, key, params, layers=("logistic",))
    classical_only = xor_transform(image, classical_key, params)

    return {
        "image": Path(path).name,
        "width": image.width,
        "height": image.height,
        "PSNR": report.psnr,
        "SSIM": report.ssim,
        "NCC": report.ncc,
        "BER": report.ber,
        "KeySensitivity": report.key_sensitivity_ssim,
        "OE": report.entropy_original,
        "EE": report.entropy_encrypted,
        "DE": report.entropy_decrypted,
        "Pearson(O&D)": report.pearson_od,
        "EavesdropDetected": report.eavesdrop_detected,
        "EncryptSeconds": encrypt_seconds,
        "DecryptSeconds": decrypt_seconds,
        "BaselineEE": entropy(baseline),
        "ClassicalEE": entropy(classical_only),
        "Agreement": session.agreement,
        "CHSH": session.chsh_s,
    }


def _summary_row(df):
    summary = {"image": SUMMARY_LABEL}
    for column in COLUMNS[1:]:
        if column == "EavesdropDetected":
            summary[column] = bool(df[column].any())
        else:
            summary[column] = float(df[column].mean())
    return summary


def batch_report(dataset_dir, run_config):
    """
    Evaluate every readable image under ``dataset_dir``.

    Per-image random streams are spawned from ``run_config.rng_seed`` so the
    rows do not depend on ``run_config.jobs``.

    Parameters
    ----------
    dataset_dir : str or Path
        Directory scanned recursively for PGM and other raster images
    run_config : RunConfig
        Chaos parameters, channel, key length, seed and worker count

    Returns
    -------
    pd.DataFrame
        One row per image in path order, columns ``COLUMNS``, followed by a
        ``summary`` row of column means

    Raises
    ------
    DatasetError
        When the directory holds no readable image
    """
    records = scan_dataset(dataset_dir)
    if not records:
        raise DatasetError(
            f"no readable images in {dataset_dir}",
            hint="add .pgm/.png files or run the sample-data command",
        )
    seeds = np.random.SeedSequence(run_config.rng_seed).spawn(len(records))
    paths = [record.path for record in records]

    print(f">> Evaluating {len(paths)} image(s) from {dataset_dir}...")
    if run_config.jobs == 1:
        rows = [process_image(p, run_config, s) for p, s in zip(paths, seeds)]
    else:
        with ProcessPoolExecutor(max_workers=run_config.jobs) as pool:
            rows = list(pool.map(process_image, paths, repeat(run_config), seeds))

    df = pd.DataFrame(rows, columns=COLUMNS)
    df = pd.concat([df, pd.DataFrame([_summary_row(df)], columns=COLUMNS)], ignore_index=True)
    print(f"   Rows: {len(rows):,} (+ summary)")
    return df


def _jsonable(value):
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return None
        return "inf" if math.isinf(value) and value > 0 else float(value)
    return value


def write_batch_report(df, out_path):
    """Write ``out_path`` (JSON records), ``<out>.txt`` and ``<out>.parquet``."""
    out_path = Path(out_path)
    records = [{k: _jsonable(v) for k, v in row.items()} for row in df.to_dict(orient="records")]
    atomic_write_text(out_path, json.dumps({"columns": COLUMNS, "rows": records}, indent=2) + "\n")
    atomic_write_text(out_path.with_name(out_path.name + ".txt"), df.to_string(index=False) + "\n")
    atomic_write_with(out_path.with_name(out_path.name + ".parquet"), lambda tmp: df.to_parquet(tmp, index=False))
    return out_path


def read_batch_report(path):
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    df = pd.DataFrame(document["rows"], columns=document["columns"])
    # null cells come back as NaN, "inf" strings as inf
    numeric = [c for c in df.columns if c not in ("image", "EavesdropDetected")]
    df[numeric] = df[numeric].astype(float)
    return df


def main():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    run_config = RunConfig(
        chaos=load_chaos_params(),
        channel=ChannelConfig(
            p_noise=config("P_NOISE"),
            detection_threshold=config("DETECTION_THRESHOLD"),
        ),
        rng_seed=config("RNG_SEED"),
        key_length=config("KEY_LENGTH"),
        sacrifice_fraction=config("SACRIFICE_FRACTION"),
        jobs=config("JOBS"),
    )
    df = batch_report(DATASET_DIR, run_config)
    out_path = write_batch_report(df, DATA_DIR / "batch_report.json")
    print(f">> Saved {out_path.name} (+ .txt, .parquet)")


if __name__ == "__main__":
    main()
