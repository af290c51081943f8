"""Logit scale and inference for small fully connected classifiers."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from ..errors import DimensionError, NumericError, SchemaError

logger = logging.getLogger(__name__)

LOGIT_EPS = 1e-7

_ACTIVATIONS = {
    "linear": lambda z: z,
    "identity": lambda z: z,
    "relu": lambda z: np.maximum(z, 0.0),
    "tanh": np.tanh,
    "sigmoid": expit,
}


def logit(p, eps: float = LOGIT_EPS):
    """Log-odds of ``p`` after clamping into ``[eps, 1 - eps]``."""
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise NumericError("probabilities must be finite")
    clamped = np.clip(arr, eps, 1.0 - eps)
    n_clamped = int(np.count_nonzero(clamped != arr))
    if n_clamped:
        logger.warning("clamped %d probabilit%s into [%g, 1 - %g]",
                       n_clamped, "y" if n_clamped == 1 else "ies", eps, eps)
    out = np.log(clamped) - np.log1p(-clamped)
    return float(out) if out.ndim == 0 else out


def sigmoid(z):
    out = expit(np.asarray(z, dtype=float))
    return float(out) if out.ndim == 0 else out


def encode(states, cardinalities: Sequence[int], encoding: str = "onehot") -> np.ndarray:
    """Network input vectors for integer state rows."""
    X = np.atleast_2d(np.asarray(states, dtype=np.int64))
    cards = np.asarray(cardinalities)
    if X.shape[1] != len(cards):
        raise DimensionError(f"states have {X.shape[1]} features, expected {len(cards)}")
    if np.any(X < 0) or np.any(X >= cards):
        raise DimensionError("state entries out of range")
    if encoding == "onehot":
        offsets = np.concatenate([[0], np.cumsum(cards)[:-1]])
        out = np.zeros((len(X), int(cards.sum())))
        rows = np.arange(len(X))[:, None]
        out[rows, X + offsets] = 1.0
        return out
    if encoding == "ordinal":
        return X / (cards - 1.0)
    raise SchemaError(f"unknown encoding {encoding!r}")


def input_dim(cardinalities: Sequence[int], encoding: str) -> int:
    return int(sum(cardinalities)) if encoding == "onehot" else len(cardinalities)


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"


@dataclass
class MLPWeights:
    """Fully connected network ending in two pre-softmax scores."""

    layers: list[Layer]
    cardinalities: tuple[int, ...]
    encoding: str = "onehot"

    def __post_init__(self):
        if not self.layers:
            raise SchemaError("network has no layers")
        if self.encoding not in ("onehot", "ordinal"):
            raise SchemaError(f"unknown encoding {self.encoding!r}")
        self.cardinalities = tuple(int(m) for m in self.cardinalities)
        fixed = []
        width = input_dim(self.cardinalities, self.encoding)
        for j, layer in enumerate(self.layers):
            W = np.asarray(layer.weight, dtype=float)
            b = np.asarray(layer.bias, dtype=float)
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise SchemaError(f"layer {j}: weight {W.shape} and bias {b.shape} do not match")
            if W.shape[1] != width:
                raise SchemaError(f"layer {j}: expects {W.shape[1]} inputs, receives {width}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise SchemaError(f"layer {j}: non-finite parameters")
            if layer.activation not in _ACTIVATIONS:
                raise SchemaError(f"layer {j}: unknown activation {layer.activation!r}")
            width = W.shape[0]
            fixed.append(Layer(W, b, layer.activation))
        if width != 2:
            raise SchemaError(f"output layer has {width} units; a two-class head is required")
        self.layers = fixed

    def scores(self, states) -> np.ndarray:
        """Pre-softmax outputs, shape ``(N, 2)``."""
        z = encode(states, self.cardinalities, self.encoding)
        with np.errstate(over="ignore", invalid="ignore"):
            for layer in self.layers:
                z = _ACTIVATIONS[layer.activation](z @ layer.weight.T + layer.bias)
                if not np.all(np.isfinite(z)):
                    raise NumericError("non-finite activation in forward pass")
        return z

    def logits(self, states) -> np.ndarray:
        s = self.scores(states)
        return s[:, 1] - s[:, 0]

    def probabilities(self, states) -> np.ndarray:
        return sigmoid(self.logits(states))

    def __call__(self, states) -> np.ndarray:
        return self.logits(states)

    def to_dict(self) -> dict:
        return {
            "encoding": self.encoding,
            "cardinalities": list(self.cardinalities),
            "layers": [{"weight": L.weight.tolist(), "bias": L.bias.tolist(),
                        "activation": L.activation} for L in self.layers],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MLPWeights":
        try:
            layers = [Layer(np.asarray(L["weight"], dtype=float), np.asarray(L["bias"], dtype=float),
                            L.get("activation", "relu")) for L in data["layers"]]
            return cls(layers, tuple(data["cardinalities"]), data.get("encoding", "onehot"))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed network weights: {exc}") from None

    @classmethod
    def random(cls, cardinalities: Sequence[int], hidden: Sequence[int], rng: np.random.Generator,
               activation: str = "relu", encoding: str = "onehot", scale: float = 1.0) -> "MLPWeights":
        """He-style random network, handy for demos and tests."""
        sizes = [input_dim(cardinalities, encoding), *hidden, 2]
        layers = []
        for j, (a, b) in enumerate(zip(sizes, sizes[1:])):
            act = "linear" if j == len(sizes) - 2 else activation
            layers.append(Layer(scale * rng.normal(0, np.sqrt(2.0 / a), (b, a)),
                                0.1 * rng.normal(size=b), act))
        return cls(layers, tuple(cardinalities), encoding)


def mlp_logit(weights: MLPWeights, x) -> float | np.ndarray:
    """``score_1 - score_0`` for one state vector (float) or a batch (array)."""
    x = np.asarray(x)
    out = weights.logits(x)
    return float(out[0]) if x.ndim == 1 else out


def load_mlp(path) -> MLPWeights:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from None
    return MLPWeights.from_dict(data)


def save_mlp(weights: MLPWeights, path) -> None:
    with open(path, "w") as fh:
        json.dump(weights.to_dict(), fh)
        fh.write("\n")
