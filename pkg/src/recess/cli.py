"""Command-line front end wiring the library into reproducible experiments.

Exit codes: 0 success, 1 runtime failure (I/O, format, transport), 2 usage.
Option precedence: explicit flags > --config JSON file > built-in defaults.
The RECESS_SEED environment variable overrides the default seed.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import shlex
import sys

import numpy as np

from . import backend
from .attacks import cw_l2, fgsm, gaussian_noise, poisson_noise, salt_pepper
from .detector import BENIGN, batch_detect, detect
from .errors import RecessError
from .filters import FilterSpec, feature_filter
from .imaging import Image, LabeledDataset, load_cifar10, load_png, quantize_u8, save_png
from .metrics import (
    RocPoint,
    auc,
    bench_filter,
    build_roc,
    format_percent,
    jsonl_record,
    render_table,
    topk_agreement,
    tpr_tnr,
)
from .predictor import TrainConfig, external_predictor, load_model, predict, save_model, train_builtin


def default_seed() -> int:
    return int(os.environ.get("RECESS_SEED", "42"))


def parse_alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1], got {value}")
    return value


def parse_alphas(text: str) -> list[float]:
    values = [parse_alpha(part) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("need at least one alpha")
    if values != sorted(values, reverse=True):
        raise argparse.ArgumentTypeError("alphas must be listed in descending order")
    return values


def parse_shape(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"shape must look like HxWxC, got {text!r}")
    try:
        h, w, c = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"shape must be integers HxWxC, got {text!r}")
    if h < 1 or w < 1 or c not in (1, 3):
        raise argparse.ArgumentTypeError(f"invalid shape {text!r}")
    return (h, w, c)


def parse_classes(text: str) -> list[int]:
    try:
        values = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"classes must be integers, got {text!r}")
    if len(values) < 2 or len(set(values)) != len(values):
        raise argparse.ArgumentTypeError("need at least two distinct classes")
    return values


def parse_params(text: str) -> dict:
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise argparse.ArgumentTypeError(f"expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        out[key.strip()] = float(value)
    return out


def open_predictor(spec: str):
    """Build a predictor from "builtin:<model-file>" or "exec:<command line>"."""
    if spec.startswith("builtin:"):
        return load_model(spec[len("builtin:"):])
    if spec.startswith("exec:"):
        return external_predictor(shlex.split(spec[len("exec:"):]))
    raise argparse.ArgumentTypeError(
        f"predictor spec must start with 'builtin:' or 'exec:', got {spec!r}"
    )


def close_predictor(predictor) -> None:
    close = getattr(predictor, "close", None)
    if close is not None:
        close()


def apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill unset options from --config JSON (flags always win)."""
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config) as fh:
            fromfile = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"unreadable config file: {exc}")
    if not isinstance(fromfile, dict):
        parser.error("config file must hold a JSON object")
    for key, value in fromfile.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            parser.error(f"config key {key!r} is not an option of this subcommand")
        if getattr(args, attr) is None:
            setattr(args, attr, value)


def fill_defaults(args: argparse.Namespace, defaults: dict) -> None:
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def cifar_files(directory: str, split: str) -> list[str]:
    pattern = "test_batch*.bin" if split == "test" else "data_batch*.bin"
    files = sorted(glob.glob(os.path.join(directory, pattern)))
    if not files:
        raise RecessError(f"no {pattern} files in {directory}")
    return files


def class_subset(dataset: LabeledDataset, classes: list[int], limit: int | None) -> LabeledDataset:
    """Keep the requested classes, remapped to 0..len(classes)-1 by position."""
    index = {cls: i for i, cls in enumerate(classes)}
    images, labels = [], []
    for img, lbl in zip(dataset.images, dataset.labels):
        if lbl in index:
            images.append(img)
            labels.append(index[lbl])
            if limit is not None and len(images) >= limit:
                break
    return LabeledDataset(images=images, labels=labels, num_classes=len(classes))


def quantized(image: Image) -> Image:
    """The image as it will read back after an 8-bit PNG round trip."""
    return Image.from_array(quantize_u8(image.pixels).astype(np.float64) / 255.0)


def cmd_filter(args) -> int:
    image = load_png(args.input)
    save_png(feature_filter(image, FilterSpec(args.alpha)), args.output)
    return 0


def cmd_train(args) -> int:
    fill_defaults(args, {"hidden": 256, "epochs": 30, "batch_size": 64,
                         "lr": 0.01, "limit": None, "seed": default_seed()})
    dataset = load_cifar10(cifar_files(args.cifar_dir, "train"))
    subset = class_subset(dataset, args.classes, args.limit)
    if len(subset) == 0:
        raise RecessError(f"no records of classes {args.classes} in {args.cifar_dir}")
    config = TrainConfig(
        hidden_size=args.hidden,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
    )
    model = train_builtin(subset, config)
    save_model(model, args.out)
    correct = sum(
        1 for img, lbl in zip(subset.images, subset.labels) if model.predict(img).label == lbl
    )
    print(jsonl_record({
        "train_accuracy": correct / len(subset),
        "train_size": len(subset),
        "classes": args.classes,
        "epochs": args.epochs,
        "hidden": args.hidden,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "seed": args.seed,
        "model": str(args.out),
    }))
    return 0


def cmd_attack(args) -> int:
    fill_defaults(args, {"eps": 8 / 255, "c": 1.0, "k": 0.0, "steps": 1000,
                         "step_size": 0.01, "limit": None, "split": "test",
                         "benign_out": None, "seed": default_seed()})
    model = load_model(args.model)
    dataset = load_cifar10(cifar_files(args.in_dataset, args.split))
    subset = class_subset(dataset, args.classes, args.limit)
    if len(subset) == 0:
        raise RecessError(f"no records of classes {args.classes} in {args.in_dataset}")

    os.makedirs(args.out_dir, exist_ok=True)
    if args.benign_out:
        os.makedirs(args.benign_out, exist_ok=True)
        benign_manifest = open(os.path.join(args.benign_out, "manifest.jsonl"), "w")

    params = (
        {"eps": args.eps}
        if args.method == "fgsm"
        else {"c": args.c, "k": args.k, "steps": args.steps, "step_size": args.step_size}
    )
    successes = 0
    with open(os.path.join(args.out_dir, "manifest.jsonl"), "w") as manifest:
        for index, (image, label) in enumerate(zip(subset.images, subset.labels)):
            clean = model.predict(image)
            if args.method == "fgsm":
                result = fgsm(model, image, true_label=label, epsilon=args.eps)
                flipped = lambda lbl: lbl != clean.label
            else:
                runner = int(np.argsort(-clean.scores, kind="stable")[1])
                result = cw_l2(
                    model, image, target=runner,
                    c=args.c, k=args.k, steps=args.steps, step_size=args.step_size,
                )
                flipped = lambda lbl: lbl == runner
            name = f"adv_{index:05d}.png"
            path = os.path.join(args.out_dir, name)
            save_png(result.adversarial, path)
            # what lands on disk is 8-bit; success is judged after that loss
            stored = quantized(result.adversarial)
            stored_label = model.predict(stored).label
            l2 = float(np.linalg.norm(stored.pixels - image.pixels))
            success = flipped(stored_label)
            successes += int(success)
            manifest.write(jsonl_record({
                "path": name,
                "index": index,
                "true_label": label,
                "clean_label": clean.label,
                "adversarial_label": stored_label,
                "l2": l2,
                "success": success,
                "method": args.method,
                "params": params,
                "seed": args.seed,
            }) + "\n")
            if args.benign_out:
                benign_name = f"benign_{index:05d}.png"
                save_png(image, os.path.join(args.benign_out, benign_name))
                benign_manifest.write(jsonl_record({
                    "path": benign_name,
                    "index": index,
                    "true_label": label,
                    "clean_label": clean.label,
                }) + "\n")
    if args.benign_out:
        benign_manifest.close()
    print(jsonl_record({
        "method": args.method,
        "attacked": len(subset),
        "successes": successes,
        "params": params,
        "seed": args.seed,
        "out_dir": str(args.out_dir),
    }))
    return 0


def cmd_detect(args) -> int:
    predictor = open_predictor(args.predictor)
    try:
        image = load_png(args.input)
        verdict = detect(image, predictor, FilterSpec(args.alpha))
    finally:
        close_predictor(predictor)
    print(jsonl_record({
        "decision": verdict.decision,
        "original_label": verdict.original_label,
        "filtered_label": verdict.filtered_label,
        "alpha": verdict.alpha,
        "input": str(args.input),
    }))
    return 0


def load_adversarial_dir(directory: str) -> list[Image]:
    """PNGs from an attack dump; failed attacks are excluded via the manifest."""
    manifest_path = os.path.join(directory, "manifest.jsonl")
    images = []
    if os.path.exists(manifest_path):
        with open(manifest_path) as fh:
            for line in fh:
                record = json.loads(line)
                if record.get("success", True):
                    images.append(load_png(os.path.join(directory, record["path"])))
    else:
        for path in sorted(glob.glob(os.path.join(directory, "*.png"))):
            images.append(load_png(path))
    return images


def load_benign_dir(directory: str) -> list[Image]:
    paths = sorted(glob.glob(os.path.join(directory, "*.png")))
    return [load_png(p) for p in paths]


def cmd_eval(args) -> int:
    fill_defaults(args, {"seed": default_seed()})
    adversarial = []
    for directory in args.adv_dir:
        adversarial.extend(load_adversarial_dir(directory))
    benign = load_benign_dir(args.benign_dir)
    if not adversarial:
        raise RecessError(f"no successful adversarial examples under {args.adv_dir}")
    if not benign:
        raise RecessError(f"no benign PNGs under {args.benign_dir}")

    predictor = open_predictor(args.predictor)
    try:
        rows = []
        points = []
        records = []
        for alpha in args.alphas:
            spec = FilterSpec(alpha)
            rates = tpr_tnr(
                batch_detect(adversarial, predictor, spec),
                batch_detect(benign, predictor, spec),
            )
            rows.append([f"{alpha:.2f}", format_percent(rates.tpr), format_percent(rates.tnr)])
            points.append(RocPoint(fpr=1.0 - rates.tnr, tpr=rates.tpr, alpha=alpha))
            records.append({
                "alpha": alpha,
                "tpr": rates.tpr,
                "tnr": rates.tnr,
                "fpr": 1.0 - rates.tnr,
                "tp": rates.counts.tp,
                "fn": rates.counts.fn,
                "tn": rates.counts.tn,
                "fp": rates.counts.fp,
                "n_adversarial": len(adversarial),
                "n_benign": len(benign),
                "adv_dirs": [str(d) for d in args.adv_dir],
                "benign_dir": str(args.benign_dir),
                "predictor": args.predictor,
                "alphas": args.alphas,
                "seed": args.seed,
            })
        curve = build_roc(points)
        area = auc(curve)
    finally:
        close_predictor(predictor)

    print(render_table(["alpha", "TPR", "TNR"], rows))
    print(f"AUC {format_percent(area)}")
    records.append({
        "auc": area,
        "roc": [[p.fpr, p.tpr, p.alpha] for p in curve.points],
        "predictor": args.predictor,
        "alphas": args.alphas,
        "seed": args.seed,
    })
    with open(args.report, "w") as fh:
        for record in records:
            fh.write(jsonl_record(record) + "\n")
    return 0


NOISE_BUILDERS = {
    "gaussian": lambda img, params, seed: gaussian_noise(img, params.get("sigma", 0.02), seed),
    "poisson": lambda img, params, seed: poisson_noise(img, params.get("scale", 255.0), seed),
    "saltpepper": lambda img, params, seed: salt_pepper(img, params.get("p", 0.01), seed),
}


def cmd_noise(args) -> int:
    fill_defaults(args, {"params": {}, "seed": default_seed()})
    benign = load_benign_dir(args.input_dir)
    if not benign:
        raise RecessError(f"no benign PNGs under {args.input_dir}")
    predictor = open_predictor(args.predictor)
    try:
        rows = []
        records = []
        for noise_type in args.types:
            build = NOISE_BUILDERS[noise_type]
            noisy_kept = []
            for i, image in enumerate(benign):
                noisy = build(image, args.params, args.seed + i)
                # natural noise is noise that leaves the prediction unchanged
                if predict(predictor, noisy).label == predict(predictor, image).label:
                    noisy_kept.append(noisy)
            for alpha in args.alphas:
                spec = FilterSpec(alpha)
                verdicts = batch_detect(noisy_kept, predictor, spec)
                benign_rate = (
                    sum(1 for v in verdicts if v.decision == BENIGN) / len(verdicts)
                    if verdicts
                    else float("nan")
                )
                top5_rate = None
                scored = 0
                agreed = 0
                for noisy in noisy_kept:
                    before = predict(predictor, noisy)
                    after = predict(predictor, feature_filter(noisy, spec))
                    if (
                        before.scores is not None
                        and after.scores is not None
                        and len(before.scores) >= 5
                    ):
                        scored += 1
                        agreed += int(topk_agreement(before.scores, after.scores, 5))
                if scored:
                    top5_rate = agreed / scored
                rows.append([
                    noise_type,
                    f"{alpha:.2f}",
                    format_percent(benign_rate),
                    format_percent(top5_rate) if top5_rate is not None else "n/a",
                    str(len(noisy_kept)),
                ])
                records.append({
                    "noise": noise_type,
                    "alpha": alpha,
                    "benign_rate": benign_rate,
                    "top5_rate": top5_rate,
                    "n_label_preserving": len(noisy_kept),
                    "n_inputs": len(benign),
                    "params": args.params,
                    "predictor": args.predictor,
                    "seed": args.seed,
                })
    finally:
        close_predictor(predictor)
    print(render_table(["noise", "alpha", "top-1 benign", "top-5", "kept"], rows))
    with open(args.report, "w") as fh:
        for record in records:
            fh.write(jsonl_record(record) + "\n")
    return 0


def cmd_bench(args) -> int:
    fill_defaults(args, {"alpha": 0.5, "seed": 0, "predictor": None})
    if args.backend == "both":
        names = backend.available_backends()
    elif args.backend == "auto":
        names = (backend.active_backend(),)
    else:
        if args.backend not in backend.available_backends():
            raise RecessError(f"backend {args.backend!r} is not built")
        names = (args.backend,)
    previous = backend.active_backend()
    rows = []
    detect_rows = []
    try:
        for name in names:
            backend.set_backend(name)
            result = bench_filter(args.shape, args.reps, alpha=args.alpha, seed=args.seed)
            rows.append(result)
            if args.predictor:
                # same workload, but timing the whole filter+predict-twice path
                import time as _time

                predictor = open_predictor(args.predictor)
                try:
                    rng = np.random.Generator(np.random.PCG64(args.seed))
                    h, w, c = args.shape
                    images = [Image.from_array(rng.random((h, w, c))) for _ in range(args.reps)]
                    spec = FilterSpec(args.alpha)
                    detect(images[0], predictor, spec)  # warm caches
                    times = []
                    for img in images:
                        start = _time.perf_counter()
                        detect(img, predictor, spec)
                        times.append(_time.perf_counter() - start)
                finally:
                    close_predictor(predictor)
                detect_rows.append((name, float(np.mean(times)), float(np.percentile(times, 95))))
    finally:
        backend.set_backend(previous)
    table = [
        [r.backend, "filter", f"{r.mean_seconds * 1e3:.3f} ms", f"{r.p95_seconds * 1e3:.3f} ms", str(r.repetitions)]
        for r in rows
    ]
    table.extend(
        [name, "detect", f"{mean * 1e3:.3f} ms", f"{p95 * 1e3:.3f} ms", str(args.reps)]
        for name, mean, p95 in detect_rows
    )
    print(render_table(["backend", "op", "mean", "p95", "reps"], table))
    for r in rows:
        print(jsonl_record({
            "backend": r.backend,
            "op": "filter",
            "mean_seconds": r.mean_seconds,
            "p95_seconds": r.p95_seconds,
            "repetitions": r.repetitions,
            "shape": list(args.shape),
            "alpha": args.alpha,
            "seed": args.seed,
            "input_digest": r.input_digest,
        }))
    for name, mean, p95 in detect_rows:
        print(jsonl_record({
            "backend": name,
            "op": "detect",
            "mean_seconds": mean,
            "p95_seconds": p95,
            "repetitions": args.reps,
            "shape": list(args.shape),
            "alpha": args.alpha,
            "seed": args.seed,
            "predictor": args.predictor,
        }))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recess",
        description="DCT low-pass feature filtering and label-only adversarial detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="low-pass filter a PNG")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--alpha", type=parse_alpha, required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("train", help="train the builtin classifier on CIFAR-format batches")
    p.add_argument("--cifar-dir", required=True)
    p.add_argument("--classes", type=parse_classes, required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--limit", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="generate adversarial examples against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=["fgsm", "cw"], required=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--step-size", type=float)
    p.add_argument("--in-dataset", required=True)
    p.add_argument("--split", choices=["train", "test"])
    p.add_argument("--classes", type=parse_classes, required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--benign-out")
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("detect", help="classify one PNG as benign or adversarial")
    p.add_argument("--predictor", required=True)
    p.add_argument("--alpha", type=parse_alpha, required=True)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="TPR/TNR table plus ROC/AUC over an alpha sweep")
    p.add_argument("--predictor", required=True)
    p.add_argument("--alphas", type=parse_alphas, required=True)
    p.add_argument("--benign-dir", required=True)
    p.add_argument("--adv-dir", action="append", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("noise", help="natural-noise tolerance report")
    p.add_argument("--predictor", required=True)
    p.add_argument("--alphas", type=parse_alphas, required=True)
    p.add_argument(
        "--types",
        type=lambda t: [s.strip() for s in t.split(",") if s.strip()],
        required=True,
    )
    p.add_argument("--params", type=parse_params)
    p.add_argument("--input-dir", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("bench", help="filter latency measurement")
    p.add_argument("--shape", type=parse_shape, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--alpha", type=parse_alpha)
    p.add_argument("--seed", type=int)
    p.add_argument("--backend", choices=["auto", "python", "compiled", "both"], default="auto")
    p.add_argument("--predictor", help="also time detect() (filter plus two predictions)")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    apply_config_file(args, parser)
    if getattr(args, "command", None) == "noise" and args.types:
        unknown = [t for t in args.types if t not in NOISE_BUILDERS]
        if unknown:
            parser.error(f"unknown noise types: {', '.join(unknown)}")
    try:
        return args.func(args)
    except RecessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
