"""Operator command line: synthesize data, augment, train, evaluate,
predict, compare architectures, and run the diagnosis service.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime/training
error. Machine-readable payloads (json/csv formats, predict output) go to
stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import metrics as ev
from . import nn
from .augment import AugmentConfig, expand_dataset
from .dataset import (
    DataError,
    DatasetSchemaError,
    batches,
    generate_synthetic,
    scan_dataset,
    split_stratified,
    write_dataset,
)
from .imaging import DecodeError
from .remedy import KbValidationError, default_kb_path, load_remedy_kb
from .server import create_app, predict_image
from .tensor import ShapeError
from .train import TrainConfig, TrainingDivergedError, fit, history_to_csv
from .zoo import (
    Model,
    ModelFormatError,
    load_model,
    proposed_spec,
    save_model,
    variant_spec,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

_DATA_ERRORS = (
    DataError,
    DatasetSchemaError,
    DecodeError,
    KbValidationError,
    ModelFormatError,
    FileNotFoundError,
    NotADirectoryError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _spec_for(selector: str):
    if selector == "proposed":
        return proposed_spec()
    return variant_spec(int(selector))


def _load_model_file(path: str) -> Model:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"model file not found: {p}")
    return load_model(p)


def cmd_synth(args) -> int:
    items = generate_synthetic(args.per_class, seed=args.seed)
    n = write_dataset(items, args.out)
    print(f"wrote {n} images to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_augment(args) -> int:
    items = scan_dataset(getattr(args, "in"))
    if not items:
        raise DataError(f"no images found under {getattr(args, 'in')}")
    cfg = AugmentConfig(seed=args.seed)
    expanded = expand_dataset(items, cfg, args.copies)
    n = write_dataset(expanded, args.out)
    print(f"wrote {n} images to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_train(args) -> int:
    items = scan_dataset(args.data)
    split = split_stratified(items, val_fraction=0.2, seed=args.seed)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        seed=args.seed,
        augment=AugmentConfig(seed=args.seed),
    )
    model, history = fit(_spec_for(args.model), split, cfg)
    save_model(model, args.out)
    if args.history:
        Path(args.history).write_bytes(history_to_csv(history))
    best = history.best_val_acc()
    print(
        f"trained {model.spec.name} for {len(history.records)} epoch(s); "
        f"best val accuracy {best if best is not None else 'n/a'}; saved to {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


def _evaluate_model(model: Model, data_dir: str) -> tuple[ev.ConfusionMatrix, list]:
    from .train import _denoise
    from .server import _fuzzy_from_metadata

    items = scan_dataset(data_dir)
    if not items:
        raise DataError(f"no images found under {data_dir}")
    items = _denoise(items, _fuzzy_from_metadata(model))
    size = int(model.metadata.get("input_size", model.spec.input_shape[0]))
    trues: list[int] = []
    preds: list[int] = []
    pos = 0
    for x, y in batches(items, 32, size=size):
        probs = model.predict_probs(x)
        preds.extend(int(i) for i in probs.data.argmax(axis=1))
        trues.extend(items[pos + j].label.id for j in range(x.shape[0]))
        pos += x.shape[0]
    cm = ev.confusion(trues, preds)
    return cm, ev.all_class_metrics(cm)


def cmd_eval(args) -> int:
    model = _load_model_file(args.model)
    cm, per_class = _evaluate_model(model, args.data)
    sys.stdout.buffer.write(ev.render_report(cm, per_class, format=args.format))
    return EXIT_OK


def cmd_predict(args) -> int:
    model = _load_model_file(args.model)
    kb = load_remedy_kb(args.kb)
    image_path = Path(args.image)
    if not image_path.is_file():
        raise FileNotFoundError(f"image file not found: {image_path}")
    prediction, remedy = predict_image(model, kb, image_path.read_bytes())
    payload = {
        "class": prediction.class_key,
        "confidence": prediction.confidence,
        "probabilities": prediction.probabilities,
        "remedy": {
            "disease_name_en": remedy.disease_name_en,
            "disease_name_bn": remedy.disease_name_bn,
            "cure_en": remedy.cure_en,
            "cure_bn": remedy.cure_bn,
            "medicine": remedy.medicine,
        },
    }
    print(json.dumps(payload, ensure_ascii=False, indent=2))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    model = _load_model_file(args.model)
    kb = load_remedy_kb(args.kb)
    static = args.static
    if static is None:
        candidate = Path("frontend") / "dist"
        static = candidate if candidate.is_dir() else None
    app = create_app(model, kb, static_dir=static)
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"--bind must look like HOST:PORT, got {args.bind!r}")
    print(f"serving on http://{args.bind}/", file=sys.stderr)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return EXIT_OK


def cmd_compare(args) -> int:
    items = scan_dataset(args.data)
    split = split_stratified(items, val_fraction=0.2, seed=args.seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "maxpool_layers", "dense_layers", "val_accuracy"])
    for k in range(1, 6):
        spec = variant_spec(k)
        cfg = TrainConfig(
            epochs=args.epochs,
            seed=args.seed,
            augment=AugmentConfig(seed=args.seed),
        )
        model, history = fit(spec, split, cfg)
        acc = history.best_val_acc()
        writer.writerow([k, spec.maxpool_count, spec.dense_count,
                         f"{acc:.6f}" if acc is not None else ""])
        print(f"{spec.name}: val accuracy {acc}", file=sys.stderr)
    Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    print(f"wrote comparison table to {args.out}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="carrot-cure",
                     description="Carrot disease classification pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("augment", help="expand a corpus with augmented copies")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--copies", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train a model on a corpus directory")
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=["1", "2", "3", "4", "5", "proposed"],
                   default="proposed")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--history")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a labeled directory")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=list(ev.REPORT_FORMATS), default="text")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one image and print the remedy")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--kb", default=str(default_kb_path()))
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the HTTP diagnosis service")
    p.add_argument("--model", required=True)
    p.add_argument("--kb", default=str(default_kb_path()))
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--static", default=None,
                   help="directory with the web UI bundle (default: frontend/dist if present)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("compare", help="train the five architectures and tabulate accuracy")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingDivergedError, nn.NumericError, ShapeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
