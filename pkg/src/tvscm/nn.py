"""Layers, activations, loss and model composition with hand-written gradients.

Batches are row-major: ``X`` has shape ``(batch, features)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, LabelRangeError
from .structmat import FFT_CROSSOVER, TwoValueCirculant, mask_decomposition, matvec_lowrank

CHECKPOINT_VERSION = 1
ACTIVATIONS = ("relu", "identity")


def _check_batch(X, n: int, what: str = "input") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n:
        raise DimensionError(f"{what} must have shape (batch, {n}), got {X.shape}")
    return X


class TVSCMLayer:
    """Square layer whose weight matrix is a TVSCM generated by ``a`` and ``b``.

    Trainable state lives in ``self.ab`` (shape ``(2,)``) and optionally
    ``self.bias``.  Call :meth:`refresh` after mutating ``ab`` in place so the
    cached operator stays consistent; :meth:`set_values` does this for you.
    """

    kind = "tvscm"

    def __init__(self, n: int, a: float = 0.0, b: float = 0.0, use_bias: bool = False,
                 bias=None, path: str = "auto", crossover: int = FFT_CROSSOVER):
        self.n = int(n)
        self.use_bias = bool(use_bias)
        self.ab = np.array([a, b], dtype=np.float64)
        if self.use_bias:
            self.bias = np.zeros(self.n) if bias is None else np.array(bias, dtype=np.float64)
            if self.bias.shape != (self.n,):
                raise DimensionError(f"bias must have shape ({self.n},), got {self.bias.shape}")
        else:
            if bias is not None:
                raise ValueError("bias given but use_bias is False")
            self.bias = None
        self.path = path
        self.crossover = crossover
        self.masks = mask_decomposition(self.n)
        # unit operators for the two gradient contractions in the lowrank route
        self._unit_a = TwoValueCirculant.from_params(1.0, 0.0, self.n).lowrank
        self._unit_b = TwoValueCirculant.from_params(0.0, 1.0, self.n).lowrank
        self.refresh()

    @property
    def in_dim(self) -> int:
        return self.n

    @property
    def out_dim(self) -> int:
        return self.n

    @property
    def a(self) -> float:
        return float(self.ab[0])

    @property
    def b(self) -> float:
        return float(self.ab[1])

    def set_values(self, a: float, b: float):
        self.ab[:] = (a, b)
        self.refresh()

    def refresh(self):
        self.op = TwoValueCirculant.from_params(self.ab[0], self.ab[1], self.n)

    def parameters(self) -> dict[str, np.ndarray]:
        params = {"ab": self.ab}
        if self.use_bias:
            params["bias"] = self.bias
        return params

    def num_params(self) -> int:
        return 2 + (self.n if self.use_bias else 0)

    def matvec_path(self) -> str:
        return self.op.resolve_path(self.path, self.crossover)

    def forward(self, X) -> np.ndarray:
        X = _check_batch(X, self.n)
        Z = self.op.matvec(X, self.path, self.crossover)
        if self.use_bias:
            Z += self.bias
        return Z

    def correlation(self, X, G) -> np.ndarray:
        """``T[k] = sum_s sum_i G[s, i] X[s, (i + k) % n]``."""
        n = self.n
        if self.matvec_path() == "fft":
            spec = np.conj(np.fft.rfft(G, axis=1)) * np.fft.rfft(X, axis=1)
            return np.fft.irfft(spec.sum(axis=0), n=n)
        P = G.T @ X
        i = np.arange(n)[:, None]
        return P[i, (i + np.arange(n)[None, :]) % n].sum(axis=0)

    def backward(self, X, G) -> tuple[dict[str, np.ndarray], np.ndarray]:
        X = _check_batch(X, self.n)
        G = _check_batch(G, self.n, "upstream gradient")
        if X.shape[0] != G.shape[0]:
            raise DimensionError(f"batch sizes differ: {X.shape[0]} vs {G.shape[0]}")
        if self.matvec_path() == "lowrank":
            # sum_k M[k] T[k] == sum(G * (X @ C(M))), and C(M) is itself a TVSCM
            da = float(np.sum(G * matvec_lowrank(self._unit_a, X)))
            db = float(np.sum(G * matvec_lowrank(self._unit_b, X)))
        else:
            T = self.correlation(X, G)
            da = float(self.masks[0] @ T)
            db = float(self.masks[1] @ T)
        grads = {"ab": np.array([da, db])}
        if self.use_bias:
            grads["bias"] = G.sum(axis=0)
        dX = self.op.matvec(G, self.path, self.crossover)
        return grads, dX

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "a": self.a,
            "b": self.b,
            "bias": None if self.bias is None else self.bias.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TVSCMLayer":
        bias = d.get("bias")
        return cls(d["n"], d["a"], d["b"], use_bias=bias is not None, bias=bias)


class DenseLayer:
    """Affine map ``X @ W.T + bias`` with ``W`` of shape ``(out, in)``."""

    kind = "dense"

    def __init__(self, in_dim: int, out_dim: int, weights=None, bias=None):
        self.weights = (np.zeros((out_dim, in_dim)) if weights is None
                        else np.array(weights, dtype=np.float64))
        self.bias = np.zeros(out_dim) if bias is None else np.array(bias, dtype=np.float64)
        if self.weights.shape != (out_dim, in_dim) or self.bias.shape != (out_dim,):
            raise DimensionError(
                f"expected weights {(out_dim, in_dim)} and bias {(out_dim,)}, "
                f"got {self.weights.shape} and {self.bias.shape}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def refresh(self):
        pass

    def parameters(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights, "bias": self.bias}

    def num_params(self) -> int:
        return self.weights.size + self.bias.size

    def forward(self, X) -> np.ndarray:
        X = _check_batch(X, self.in_dim)
        Z = X @ self.weights.T
        Z += self.bias
        return Z

    def backward(self, X, G) -> tuple[dict[str, np.ndarray], np.ndarray]:
        X = _check_batch(X, self.in_dim)
        G = _check_batch(G, self.out_dim, "upstream gradient")
        grads = {"weights": G.T @ X, "bias": G.sum(axis=0)}
        return grads, G @ self.weights

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "m": self.out_dim,
            "n": self.in_dim,
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DenseLayer":
        return cls(d["n"], d["m"], d["weights"], d["bias"])


def relu(Z):
    return np.maximum(Z, 0.0)


def relu_backward(Z, G):
    return np.where(Z > 0.0, G, 0.0)


def softmax_cross_entropy(logits, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. ``logits``."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    batch, k = logits.shape
    if labels.shape != (batch,):
        raise DimensionError(f"labels must have shape ({batch},), got {labels.shape}")
    if batch and (labels.min() < 0 or labels.max() >= k):
        raise LabelRangeError(f"labels must lie in 0..{k - 1}")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(batch)
    loss = -float(log_probs[rows, labels].mean())
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    grad /= batch
    return loss, grad


@dataclass
class Model:
    """Ordered layers, each followed by an activation, feeding a softmax head."""

    layers: list
    activations: list
    classes: int

    def __post_init__(self):
        if len(self.layers) != len(self.activations) or not self.layers:
            raise ValueError("need one activation per layer and at least one layer")
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise DimensionError(f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}")
        if self.layers[-1].out_dim != self.classes:
            raise DimensionError(
                f"final layer has {self.layers[-1].out_dim} outputs, expected {self.classes}")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    def forward(self, X) -> np.ndarray:
        """Logits for a batch; no intermediate state is kept."""
        for layer, act in zip(self.layers, self.activations):
            X = layer.forward(X)
            if act == "relu":
                np.maximum(X, 0.0, out=X)
        return X

    def forward_train(self, X) -> tuple[np.ndarray, list]:
        cache = []
        for layer, act in zip(self.layers, self.activations):
            Z = layer.forward(X)
            cache.append((X, Z))
            X = relu(Z) if act == "relu" else Z
        return X, cache

    def backward(self, cache: list, G) -> list[dict[str, np.ndarray]]:
        grads = [None] * len(self.layers)
        for i in reversed(range(len(self.layers))):
            X, Z = cache[i]
            if self.activations[i] == "relu":
                G = relu_backward(Z, G)
            grads[i], G = self.layers[i].backward(X, G)
        return grads

    def loss_and_grads(self, X, labels) -> tuple[float, np.ndarray, list]:
        logits, cache = self.forward_train(X)
        loss, dlogits = softmax_cross_entropy(logits, labels)
        return loss, logits, self.backward(cache, dlogits)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.forward(X), axis=1)

    def set_matvec_path(self, path: str):
        for layer in self.layers:
            if isinstance(layer, TVSCMLayer):
                layer.path = path

    def to_dict(self) -> dict:
        layers = []
        for layer, act in zip(self.layers, self.activations):
            d = layer.to_dict()
            d["activation"] = act
            layers.append(d)
        return {
            "format_version": CHECKPOINT_VERSION,
            "layers": layers,
            "loss": {"kind": "softmax_cross_entropy", "classes": self.classes},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        if d.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint format_version {d.get('format_version')!r}")
        layers, acts = [], []
        for ld in d["layers"]:
            kind = ld["kind"]
            if kind == "tvscm":
                layers.append(TVSCMLayer.from_dict(ld))
            elif kind == "dense":
                layers.append(DenseLayer.from_dict(ld))
            else:
                raise ValueError(f"unknown layer kind {kind!r}")
            acts.append(ld["activation"])
        loss = d["loss"]
        if loss.get("kind") != "softmax_cross_entropy":
            raise ValueError(f"unsupported loss {loss.get('kind')!r}")
        return cls(layers, acts, int(loss["classes"]))


def count_parameters(model: Model) -> int:
    return sum(layer.num_params() for layer in model.layers)


def save_checkpoint(model: Model, path):
    with open(path, "w") as f:
        json.dump(model.to_dict(), f)
        f.write("\n")


def load_checkpoint(path) -> Model:
    with open(path) as f:
        return Model.from_dict(json.load(f))


# Hidden widths of the dense baselines, keyed by (input dim, classes).  These
# are the only integer solutions of the published parameter counts; other
# shapes (synthetic data) default to a square hidden layer.
DENSE_HIDDEN = {(784, 10): 784, (187, 5): 128}
ARCHITECTURES = ("dense", "tvscm")


def build_model(arch: str, in_dim: int, classes: int, hidden: int | None = None,
                tvscm_bias: bool = False) -> Model:
    """Two-layer classifier skeleton with all parameters zero.

    ``dense``: Dense(in -> hidden) + ReLU -> Dense(hidden -> classes).
    ``tvscm``: TVSCM(in) + ReLU -> Dense(in -> classes).
    """
    if arch == "dense":
        h = hidden if hidden is not None else DENSE_HIDDEN.get((in_dim, classes), in_dim)
        layers = [DenseLayer(in_dim, h), DenseLayer(h, classes)]
    elif arch == "tvscm":
        layers = [TVSCMLayer(in_dim, use_bias=tvscm_bias), DenseLayer(in_dim, classes)]
    else:
        raise ValueError(f"unknown architecture {arch!r}; choose from {ARCHITECTURES}")
    return Model(layers, ["relu", "identity"], classes)
