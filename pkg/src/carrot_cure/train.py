"""Training loop: epochs over augmented batches, per-epoch validation,
history capture, and best-checkpoint selection.

Fully deterministic for a given config seed: weight init, shuffling,
augmentation draws, and dropout masks all derive from namespaced seed
sequences keyed by (seed, stream, epoch, index).
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import nn
from .augment import AugmentConfig, apply_params, expand_dataset, sample_augmentation
from .dataset import DataError, DatasetSplit, LabeledImage, batches
from .imaging import FuzzyFilterConfig, fuzzy_filter
from .zoo import Model, ModelSpec, init_model

log = logging.getLogger(__name__)

# Seed-stream tags (second entry of every SeedSequence used by fit).
_STREAM_SHUFFLE = 1
_STREAM_AUGMENT = 2
_STREAM_DROPOUT = 3


class TrainingDivergedError(RuntimeError):
    """Loss or activations became non-finite during training."""

    def __init__(self, epoch: int, batch: int, detail: str):
        super().__init__(f"training diverged at epoch {epoch}, batch {batch}: {detail}")
        self.epoch = epoch
        self.batch = batch


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    optimizer: nn.OptimizerKind = "adam"
    learning_rate: float = 1e-3
    val_fraction: float = 0.2
    augment: Optional[AugmentConfig] = field(default_factory=AugmentConfig)
    seed: int = 0
    early_stop_patience: Optional[int] = 10
    fuzzy: Optional[FuzzyFilterConfig] = field(default_factory=FuzzyFilterConfig)
    # When set, the training side is expanded once up front (originals plus
    # this many augmented copies each) instead of re-augmenting every epoch.
    pre_expand_copies: Optional[int] = None

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 < self.val_fraction < 1:
            raise ValueError(f"val_fraction must be in (0, 1), got {self.val_fraction}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def best_val_acc(self) -> Optional[float]:
        if not self.records:
            return None
        return max(r.val_acc for r in self.records)


def history_to_csv(history: TrainHistory) -> bytes:
    buf = io.StringIO()
    buf.write("epoch,train_loss,train_acc,val_loss,val_acc\n")
    for r in history.records:
        buf.write(
            f"{r.epoch},{r.train_loss:.6f},{r.train_acc:.6f},"
            f"{r.val_loss:.6f},{r.val_acc:.6f}\n"
        )
    return buf.getvalue().encode("utf-8")


def _denoise(items: list[LabeledImage], cfg: Optional[FuzzyFilterConfig]) -> list[LabeledImage]:
    if cfg is None:
        return list(items)
    return [LabeledImage(fuzzy_filter(i.image, cfg), i.label, i.source_path) for i in items]


def _evaluate(model: Model, items: list[LabeledImage],
              batch_size: int) -> tuple[float, float]:
    """Mean cross-entropy and accuracy over a split, inference mode."""
    size = model.spec.input_shape[0]
    total_loss = 0.0
    correct = 0
    n = 0
    for x, y in batches(items, batch_size, size=size):
        probs = model.predict_probs(x)
        b = x.shape[0]
        total_loss += nn.cross_entropy(probs, y) * b
        correct += int((probs.data.argmax(axis=1) == y.data.argmax(axis=1)).sum())
        n += b
    return total_loss / n, correct / n


def fit(spec: ModelSpec, data: DatasetSplit, cfg: TrainConfig) -> tuple[Model, TrainHistory]:
    """Train a model; returns the best-validation-accuracy weights and history."""
    if not data.train or not data.validation:
        raise DataError("both train and validation splits must be non-empty")

    model = init_model(spec, seed=cfg.seed)
    size = spec.input_shape[0]

    train_items = _denoise(data.train, cfg.fuzzy)
    val_items = _denoise(data.validation, cfg.fuzzy)

    augment_per_epoch = cfg.augment is not None and cfg.pre_expand_copies is None
    if cfg.augment is not None and cfg.pre_expand_copies is not None:
        train_items = expand_dataset(train_items, cfg.augment, cfg.pre_expand_copies)

    params = model.params
    names = model.parameter_names()
    opt = nn.OptimizerState.create(cfg.optimizer, cfg.learning_rate, params)

    history = TrainHistory()
    best_params = model.copy_params()
    best_val = -1.0
    epochs_since_best = 0

    for epoch in range(cfg.epochs):
        shuffle_rng = np.random.default_rng(
            np.random.SeedSequence((cfg.seed, _STREAM_SHUFFLE, epoch))
        )
        order = shuffle_rng.permutation(len(train_items))

        epoch_items: list[LabeledImage] = []
        for idx in order:
            item = train_items[idx]
            if augment_per_epoch:
                draw_rng = np.random.default_rng(
                    np.random.SeedSequence((cfg.seed, _STREAM_AUGMENT, epoch, int(idx)))
                )
                p = sample_augmentation(cfg.augment, draw_rng)
                item = LabeledImage(
                    apply_params(item.image, p, cfg.augment), item.label, item.source_path
                )
            epoch_items.append(item)

        run_loss = 0.0
        correct = 0
        seen = 0
        for bi, (x, y) in enumerate(batches(epoch_items, cfg.batch_size, size=size)):
            drop_rng = np.random.default_rng(
                np.random.SeedSequence((cfg.seed, _STREAM_DROPOUT, epoch, bi))
            )
            try:
                probs, caches = model.forward(x, train=True, rng=drop_rng)
            except nn.NumericError as exc:
                raise TrainingDivergedError(epoch, bi, str(exc)) from exc
            loss = nn.cross_entropy(probs, y)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, bi, f"loss={loss}")
            grads = model.backward(caches, probs, y)
            try:
                opt.step(params, grads, names)
            except nn.NumericError as exc:
                raise TrainingDivergedError(epoch, bi, str(exc)) from exc
            b = x.shape[0]
            run_loss += loss * b
            correct += int((probs.data.argmax(axis=1) == y.data.argmax(axis=1)).sum())
            seen += b

        val_loss, val_acc = _evaluate(model, val_items, cfg.batch_size)
        record = EpochRecord(epoch, run_loss / seen, correct / seen, val_loss, val_acc)
        history.records.append(record)
        log.info(
            "epoch %d: train_loss=%.4f train_acc=%.4f val_loss=%.4f val_acc=%.4f",
            epoch, record.train_loss, record.train_acc, val_loss, val_acc,
        )

        if val_acc > best_val:
            best_val = val_acc
            best_params = model.copy_params()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if cfg.early_stop_patience is not None and epochs_since_best >= cfg.early_stop_patience:
                log.info("early stop after epoch %d (no improvement for %d epochs)",
                         epoch, epochs_since_best)
                break

    model.set_params(best_params)
    model.metadata.update(
        {
            "seed": cfg.seed,
            "epochs_trained": len(history.records),
            "val_accuracy": None if best_val < 0 else best_val,
            "corpus_size": len(data.train) + len(data.validation),
            "optimizer": cfg.optimizer,
            "learning_rate": cfg.learning_rate,
            "batch_size": cfg.batch_size,
            "fuzzy": None
            if cfg.fuzzy is None
            else {"window": cfg.fuzzy.window, "threshold": cfg.fuzzy.threshold},
            "input_size": size,
        }
    )
    return model, history
