"""
Command-line entry point.

    python src/cli.py keygen --bits 256 --seed 1 --out key.json
    python src/cli.py qkd --pairs 100000 --noise 0.02 --eavesdrop intercept-resend --out qkey.json
    python src/cli.py combine --key key.json --key qkey.json --out combined.json
    python src/cli.py encrypt --in brain.pgm --key combined.json --out brain.enc.pgm
    python src/cli.py decrypt --in brain.enc.pgm --key combined.json --out brain.dec.pgm
    python src/cli.py analyze --original brain.pgm --encrypted brain.enc.pgm \\
        --decrypted brain.dec.pgm --key combined.json --out report.json
    python src/cli.py batch --dataset _data/images --out _data/batch_report.json
    python src/cli.py demo-message --text HELLO --key 101011 --quantum-key 110110
    python src/cli.py sample-data --out _data/images

Exit status: 0 success, 1 error, 2 usage error, 3 eavesdropping detected (qkd).
Errors are printed to stderr as one line:

    error kind=<ErrorClass> message="..." hint="..."
"""

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from analysis_metrics import build_report, key_sensitivity
from atomic_io import atomic_write_text
from batch_report import batch_report, write_batch_report
from create_sample_dataset import write_sample_dataset
from errors import ParameterError, QkdImageError
from image_cipher import check_envelope, decrypt_message, encrypt_message, roundtrip_verify, seal, xor_transform
from image_io import load_image, save_image
from qkd_sim import (
    BitKey,
    ChannelConfig,
    combine_keys,
    generate_key,
    key_material,
    pairs_for_key,
    read_key_file,
    run_e91_session,
    write_key_file,
)
from settings import RunConfig, config, load_chaos_params

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_EAVESDROP = 3

ENVELOPE_SUFFIX = ".envelope.json"
BIT_STRING = re.compile(r"^[01]+$")


def _envelope_path(image_path):
    image_path = Path(image_path)
    return image_path.with_name(image_path.name + ENVELOPE_SUFFIX)


def _seed(text):
    """argparse type for RNG seeds: an integer in [0, 2**64)."""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2**64), got {value}")
    return value


def _read_envelope(sidecar):
    try:
        metadata = json.loads(sidecar.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParameterError(
            f"envelope sidecar {sidecar} is not valid JSON: {exc.msg}",
            hint="delete the sidecar or encrypt again",
        )
    if not isinstance(metadata, dict):
        raise ParameterError(
            f"envelope sidecar {sidecar} does not hold a JSON object",
            hint="delete the sidecar or encrypt again",
        )
    return metadata


def _load_key(source):
    """A key file path, or an inline bit string such as ``101011``."""
    if BIT_STRING.match(source) and not Path(source).exists():
        return BitKey.from_string(source), None
    key_file = read_key_file(source)
    return key_file.key, key_file.session_stats


def _chaos_params(args):
    return load_chaos_params(getattr(args, "params", None), burn_in=getattr(args, "burn_in", None))


def _channel(args):
    return ChannelConfig(
        p_noise=args.noise,
        eavesdropper=args.eavesdrop,
        detection_threshold=args.threshold,
    )


def cmd_keygen(args):
    rng = np.random.default_rng(args.seed)
    key = generate_key(args.bits, rng)
    write_key_file(args.out, key, created_with_seed=args.seed)
    print(f">> Wrote classical key {key.key_id()} ({key.length} bits) to {args.out}")
    return EXIT_OK


def cmd_qkd(args):
    channel = _channel(args)
    pairs = args.pairs or pairs_for_key(args.bits or config("KEY_LENGTH"), args.sacrifice)
    rng = np.random.default_rng(args.seed)
    print(f">> Running E91 session with {pairs:,} pairs (eavesdropper: {channel.eavesdropper})...")
    session = run_e91_session(pairs, channel, rng, args.sacrifice)
    key = key_material(session, args.bits)
    stats = session.stats()
    write_key_file(args.out, key, created_with_seed=args.seed, session_stats=stats)
    print(f"   Sifted bits: {stats.sifted_length:,} (tested {stats.test_length:,})")
    print(f"   Agreement: {stats.agreement:.4f}  CHSH S: {stats.chsh_s:+.4f}")
    print(f"   Eavesdropping detected: {'Yes' if stats.eavesdrop_detected else 'No'}")
    print(f">> Wrote quantum key {key.key_id()} ({key.length} bits) to {args.out}")
    return EXIT_EAVESDROP if stats.eavesdrop_detected else EXIT_OK


def cmd_combine(args):
    if len(args.key) != 2:
        raise ParameterError("combine takes exactly two --key arguments")
    first, _ = _load_key(args.key[0])
    second, _ = _load_key(args.key[1])
    combined = combine_keys(first, second)
    write_key_file(args.out, combined)
    print(f">> Wrote combined key {combined.key_id()} ({combined.length} bits) to {args.out}")
    return EXIT_OK


def cmd_encrypt(args):
    key, _ = _load_key(args.key)
    params = _chaos_params(args)
    envelope = seal(load_image(args.input), key, params)
    save_image(args.out, envelope.image)
    atomic_write_text(_envelope_path(args.out), json.dumps(envelope.metadata(), indent=2) + "\n")
    print(f">> Encrypted {args.input} -> {args.out}")
    return EXIT_OK


def cmd_decrypt(args):
    key, _ = _load_key(args.key)
    params = _chaos_params(args)
    sidecar = _envelope_path(args.input)
    if sidecar.is_file():
        check_envelope(_read_envelope(sidecar), key, params)
    save_image(args.out, xor_transform(load_image(args.input), key, params))
    print(f">> Decrypted {args.input} -> {args.out}")
    return EXIT_OK


def cmd_analyze(args):
    key, session_stats = _load_key(args.key)
    params = _chaos_params(args)
    original = load_image(args.original)
    encrypted = load_image(args.encrypted)
    decrypted = load_image(args.decrypted)
    sensitivity = key_sensitivity(original, key, params, args.flip_index)
    report = build_report(original, encrypted, decrypted, session_stats, sensitivity)
    out = Path(args.out)
    atomic_write_text(out, report.to_json())
    atomic_write_text(out.with_name(out.name + ".txt"), report.to_table() + "\n")
    print(report.to_table())
    print(f">> Saved {out}")
    return EXIT_OK


def cmd_batch(args):
    run_config = RunConfig(
        chaos=_chaos_params(args),
        channel=_channel(args),
        rng_seed=args.seed,
        key_length=args.bits,
        pair_count=args.pairs,
        sacrifice_fraction=args.sacrifice,
        jobs=args.jobs,
        input_path=Path(args.dataset),
        output_path=Path(args.out),
    )
    df = batch_report(run_config.input_path, run_config)
    write_batch_report(df, run_config.output_path)
    print(df.to_string(index=False))
    print(f">> Saved {run_config.output_path} (+ .txt, .parquet)")
    return EXIT_OK


def _message_key(key):
    """Repeat a key shorter than one byte until it fills whole bytes."""
    if key.length >= 8:
        return key
    span = math.lcm(key.length, 8)
    print(f"   Combined key has {key.length} bits; repeating it to {span} bits for the message")
    return BitKey(np.resize(key.bits, span))


def cmd_demo_message(args):
    classical, _ = _load_key(args.key)
    print(f"Classical Key (K): {classical.to_string()}")
    combined = classical
    if args.quantum_key:
        quantum, _ = _load_key(args.quantum_key)
        print(f"Quantum Key (K1): {quantum.to_string()}")
        combined = combine_keys(classical, quantum)
        print(f"Combined Key (K'): {combined.to_string()}")
    message = args.text.encode("utf-8")
    pad = _message_key(combined)
    ciphertext = encrypt_message(message, pad)
    recovered = decrypt_message(ciphertext, pad)
    print(f"Original Message (M): {args.text!r}")
    print(f"Encrypted Message (C): {ciphertext.hex()}")
    print(f"Decrypted Message (M'): {recovered.decode('utf-8', errors='replace')!r}")
    verdict = roundtrip_verify(message, recovered)
    print(verdict)
    return EXIT_OK if verdict.name == "SUCCESS" else EXIT_ERROR


def cmd_sample_data(args):
    paths = write_sample_dataset(Path(args.out), size=args.size, seed=args.seed)
    print(f">> Wrote {len(paths)} sample image(s) to {args.out}")
    return EXIT_OK


def _add_chaos_options(parser):
    parser.add_argument("--params", help="JSON file of chaos parameter overrides")
    parser.add_argument("--burn-in", type=int, default=None, help="iterations discarded per map")


def _add_channel_options(parser):
    parser.add_argument("--noise", type=float, default=config("P_NOISE"), help="bit-flip probability")
    parser.add_argument(
        "--eavesdrop",
        choices=["none", "intercept-resend"],
        default="none",
        help="eavesdropper on the quantum channel",
    )
    parser.add_argument(
        "--threshold",
        type=float,
        default=config("DETECTION_THRESHOLD"),
        help="agreement below this flags eavesdropping",
    )
    parser.add_argument("--sacrifice", type=float, default=config("SACRIFICE_FRACTION"), help="sifted fraction tested")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qkd-image",
        description="Chaotic image encryption keyed by a simulated E91 session.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="random classical key")
    p.add_argument("--bits", type=int, default=config("KEY_LENGTH"))
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_keygen)

    p = sub.add_parser("qkd", help="run an E91 session and save the key")
    p.add_argument("--pairs", type=int, default=None, help="entangled pairs (default: sized for --bits)")
    p.add_argument("--bits", type=int, default=None, help="truncate the key to this many bits")
    _add_channel_options(p)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_qkd)

    p = sub.add_parser("combine", help="XOR two keys of equal length")
    p.add_argument("--key", action="append", required=True, help="key file or bit string (twice)")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_combine)

    for name, handler in (("encrypt", cmd_encrypt), ("decrypt", cmd_decrypt)):
        p = sub.add_parser(name, help=f"{name} a grayscale image")
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--key", required=True)
        _add_chaos_options(p)
        p.add_argument("--out", required=True)
        p.set_defaults(handler=handler)

    p = sub.add_parser("analyze", help="metrics for an encrypt/decrypt round trip")
    p.add_argument("--original", required=True)
    p.add_argument("--encrypted", required=True)
    p.add_argument("--decrypted", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--flip-index", type=int, default=0, help="key bit flipped for key sensitivity")
    _add_chaos_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("batch", help="evaluate every image in a directory")
    p.add_argument("--dataset", default=str(config("DATASET_DIR")))
    p.add_argument("--bits", type=int, default=config("KEY_LENGTH"))
    p.add_argument("--pairs", type=int, default=None)
    _add_channel_options(p)
    _add_chaos_options(p)
    p.add_argument("--seed", type=_seed, default=config("RNG_SEED"))
    p.add_argument("--jobs", type=int, default=config("JOBS"))
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_batch)

    p = sub.add_parser("demo-message", help="encrypt and decrypt a text message")
    p.add_argument("--text", required=True)
    p.add_argument("--key", required=True, help="classical key file or bit string")
    p.add_argument("--quantum-key", default=None, help="quantum key file or bit string")
    p.set_defaults(handler=cmd_demo_message)

    p = sub.add_parser("sample-data", help="write the synthetic image dataset")
    p.add_argument("--out", default=str(config("DATASET_DIR")))
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--seed", type=_seed, default=config("RNG_SEED"))
    p.set_defaults(handler=cmd_sample_data)
    return parser


def _quote(text):
    return json.dumps(str(text), ensure_ascii=False)


def format_error(exc):
    hint = getattr(exc, "hint", None) or ""
    return f"error kind={type(exc).__name__} message={_quote(exc)} hint={_quote(hint)}"


def run_command(argv=None):
    """Parse ``argv``, run the subcommand and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.handler(args)
    except (QkdImageError, OSError) as exc:
        print(format_error(exc), file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
