"""Deterministic mini-batch training, evaluation and initialization."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Dataset
from .errors import DimensionError, DivergenceError
from .nn import DenseLayer, Model, TVSCMLayer, softmax_cross_entropy


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    optimizer: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.9
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if not self.lr >= 0.0:
            raise ValueError("learning rate must be non-negative")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}; use 'adam' or 'sgd'")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    train_acc: float
    test_acc: float | None
    seconds: float


@dataclass
class TrainReport:
    config: dict
    epochs: list[EpochRecord] = field(default_factory=list)

    def to_dict(self, timing: bool = True) -> dict:
        rows = []
        for rec in self.epochs:
            d = asdict(rec)
            if not timing:
                del d["seconds"]
            rows.append(d)
        return {"config": self.config, "epochs": rows}

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2) + "\n"

    def to_csv(self, timing: bool = True) -> str:
        cols = ["epoch", "loss", "train_acc", "test_acc"] + (["seconds"] if timing else [])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for rec in self.epochs:
            d = asdict(rec)
            w.writerow(["" if d[c] is None else repr(d[c]) for c in cols])
        return buf.getvalue()

    def timings_csv(self) -> str:
        lines = ["epoch,seconds"] + [f"{r.epoch},{r.seconds!r}" for r in self.epochs]
        return "\n".join(lines) + "\n"

    @property
    def epoch_seconds(self) -> list[float]:
        return [r.seconds for r in self.epochs]


class SGD:
    def __init__(self, lr: float, momentum: float = 0.0):
        self.lr = lr
        self.momentum = momentum
        self.velocity = {}

    def step(self, key, param: np.ndarray, grad: np.ndarray):
        if self.momentum:
            v = self.velocity.get(key)
            v = grad.copy() if v is None else self.momentum * v + grad
            self.velocity[key] = v
            grad = v
        param -= self.lr * grad


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    def tick(self):
        self.t += 1

    def step(self, key, param: np.ndarray, grad: np.ndarray):
        m = self.m.get(key)
        v = self.v.get(key)
        if m is None:
            m = np.zeros_like(param)
            v = np.zeros_like(param)
        m = self.beta1 * m + (1 - self.beta1) * grad
        v = self.beta2 * v + (1 - self.beta2) * grad * grad
        self.m[key], self.v[key] = m, v
        m_hat = m / (1 - self.beta1 ** self.t)
        v_hat = v / (1 - self.beta2 ** self.t)
        param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(cfg: TrainConfig):
    if cfg.optimizer == "adam":
        return Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    return SGD(cfg.lr, cfg.momentum)


def init_parameters(model: Model, seed: int) -> Model:
    """Fill ``model`` in place: U(+-1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(seed)
    for layer in model.layers:
        if isinstance(layer, DenseLayer):
            bound = 1.0 / math.sqrt(layer.in_dim)
            layer.weights[...] = rng.uniform(-bound, bound, layer.weights.shape)
            layer.bias[...] = 0.0
        elif isinstance(layer, TVSCMLayer):
            bound = 1.0 / math.sqrt(layer.n)
            layer.ab[:] = rng.uniform(-bound, bound, 2)
            if layer.bias is not None:
                layer.bias[...] = 0.0
        layer.refresh()
    return model


def _check_shapes(model: Model, data: Dataset):
    if data.dim != model.in_dim:
        raise DimensionError(f"dataset has {data.dim} features, model expects {model.in_dim}")
    if data.classes != model.classes:
        raise DimensionError(f"dataset has {data.classes} classes, model expects {model.classes}")


def evaluate(model: Model, data: Dataset, chunk: int = 1024) -> dict:
    """Accuracy and mean cross-entropy over the whole dataset."""
    _check_shapes(model, data)
    correct = 0
    total_loss = 0.0
    for start in range(0, len(data), chunk):
        X = data.features[start:start + chunk]
        y = data.labels[start:start + chunk]
        logits = model.forward(X)
        loss, _ = softmax_cross_entropy(logits, y)
        total_loss += loss * len(y)
        correct += int(np.sum(np.argmax(logits, axis=1) == y))
    n = len(data)
    return {"accuracy": correct / n if n else 0.0, "loss": total_loss / n if n else 0.0}


def train(model: Model, data: Dataset, cfg: TrainConfig, test: Dataset | None = None,
          progress=None) -> tuple[Model, TrainReport]:
    """Run ``cfg.epochs`` epochs of mini-batch updates on ``model`` in place.

    ``train_acc`` is the running accuracy of each batch's predictions taken
    before that batch's update.  ``progress`` is called with each finished
    :class:`EpochRecord`.
    """
    _check_shapes(model, data)
    if test is not None:
        _check_shapes(model, test)
    if cfg.batch_size > len(data):
        raise ValueError(f"batch_size {cfg.batch_size} exceeds dataset size {len(data)}")

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    opt = make_optimizer(cfg)
    report = TrainReport(config=asdict(cfg))
    n = len(data)

    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        loss_sum = 0.0
        correct = 0
        for batch_idx, start in enumerate(range(0, n, cfg.batch_size), start=1):
            idx = order[start:start + cfg.batch_size]
            X = data.features[idx]
            y = data.labels[idx]
            loss, logits, grads = model.loss_and_grads(X, y)
            if not math.isfinite(loss):
                raise DivergenceError(epoch, batch_idx, loss)
            loss_sum += loss * len(idx)
            correct += int(np.sum(np.argmax(logits, axis=1) == y))
            if isinstance(opt, Adam):
                opt.tick()
            for li, (layer, g) in enumerate(zip(model.layers, grads)):
                for name, param in layer.parameters().items():
                    opt.step((li, name), param, g[name])
                layer.refresh()
        seconds = time.perf_counter() - t0
        test_acc = evaluate(model, test)["accuracy"] if test is not None else None
        rec = EpochRecord(epoch, loss_sum / n, correct / n, test_acc, seconds)
        report.epochs.append(rec)
        if progress is not None:
            progress(rec)
    return model, report
