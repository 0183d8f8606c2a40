"""Label generator, importance predictor and decoder of the toy model.

  labels      E(y) = relu(y (*) label_kernel + label_bias)          H x W x D
  importance  W(y) = y (*) weight_kernel + weight_bias               H x W x D
  decoder     p    = sigmoid(enc @ decoder_enc + x @ decoder_feat + decoder_bias)

Every module has an explicit backward so gradients can be pushed through the
unrolled learner into E and W.
"""
import json
import logging
import os
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import DimensionError
from .ltt_codec import read_tensor, write_tensor
from .tensor_ops import conv2d, conv2d_transpose

logger = logging.getLogger(__name__)

LABEL_BIAS_INIT = 0.1
WEIGHT_BIAS_INIT = 1.0
MANIFEST_NAME = "modules.json"


def _fan_in_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -z))


def bce_with_logits(logits: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient with respect to the logits"""
    loss = float(np.mean(np.logaddexp(0.0, logits) - target * logits))
    grad = (sigmoid(logits) - target) / logits.size
    return loss, grad


@dataclass
class DecoderCache:
    encoding: np.ndarray
    features: np.ndarray
    logits: np.ndarray


class ToyModules:
    """Parameter container for E, W, the decoder and optionally log(lambda)"""

    def __init__(self, params: Dict[str, np.ndarray], fixed_labels: bool = False):
        self.params = {name: np.asarray(value, dtype=np.float64) for name, value in params.items()}
        self.fixed_labels = fixed_labels
        for name, value in self.params.items():
            if not np.all(np.isfinite(value)):
                raise ValueError(f"parameter {name} contains non-finite values")

    @classmethod
    def initialize(cls, out_channels: int, in_channels: int, kernel_size: int, seed: int = 0,
                   fixed_labels: bool = False, lam: Optional[float] = None,
                   learn_weights: bool = True) -> "ToyModules":
        """Fan-in scaled uniform weights; biases start at fixed constants.

        With learn_weights False (always the case for fixed labels) there is no
        importance predictor and W is identically one.
        """
        if fixed_labels and out_channels != 1:
            raise DimensionError(f"fixed labels use the mask itself, so D must be 1, got {out_channels}")
        rng = np.random.default_rng(seed)
        k = kernel_size
        params = {
            "decoder_enc": _fan_in_uniform(rng, (out_channels,), out_channels + in_channels),
            "decoder_feat": _fan_in_uniform(rng, (in_channels,), out_channels + in_channels),
            "decoder_bias": np.zeros(1),
        }
        if not fixed_labels:
            params["label_kernel"] = np.abs(_fan_in_uniform(rng, (k, k, 1, out_channels), k * k))
            params["label_bias"] = np.full(out_channels, LABEL_BIAS_INIT)
            weight_kernel = _fan_in_uniform(rng, (k, k, 1, out_channels), k * k) * 0.1
            if learn_weights:
                params["weight_kernel"] = weight_kernel
                params["weight_bias"] = np.full(out_channels, WEIGHT_BIAS_INIT)
        if lam is not None:
            params["log_lambda"] = np.array([np.log(lam)])
        return cls(params, fixed_labels=fixed_labels)

    @property
    def out_channels(self) -> int:
        return self.params["decoder_enc"].shape[0]

    @property
    def in_channels(self) -> int:
        return self.params["decoder_feat"].shape[0]

    @property
    def learns_weights(self) -> bool:
        return "weight_kernel" in self.params

    @property
    def learns_lambda(self) -> bool:
        return "log_lambda" in self.params

    def lam(self, default: float) -> float:
        if self.learns_lambda:
            return float(np.exp(self.params["log_lambda"][0]))
        return default

    def copy(self) -> "ToyModules":
        return ToyModules({name: value.copy() for name, value in self.params.items()}, self.fixed_labels)

    def labels(self, mask: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Label encoding of a mask; also returns the pre-activation for backward"""
        if self.fixed_labels:
            return np.array(mask, dtype=np.float64), None
        pre = conv2d(mask, self.params["label_kernel"]) + self.params["label_bias"]
        return np.maximum(pre, 0.0), pre

    def importance(self, mask: np.ndarray) -> np.ndarray:
        if not self.learns_weights:
            return np.ones(mask.shape[:2] + (self.out_channels,))
        return conv2d(mask, self.params["weight_kernel"]) + self.params["weight_bias"]

    def decode(self, features: np.ndarray, encoding: np.ndarray) -> Tuple[np.ndarray, DecoderCache]:
        """Mask logits H x W x 1 from the target-module output and the features"""
        logits = (encoding @ self.params["decoder_enc"] + features @ self.params["decoder_feat"]
                  + self.params["decoder_bias"][0])[..., None]
        return logits, DecoderCache(encoding=encoding, features=features, logits=logits)

    def zero_grads(self) -> Dict[str, np.ndarray]:
        return {name: np.zeros_like(value) for name, value in self.params.items()}

    def decode_backward(self, cache: DecoderCache, logits_bar: np.ndarray,
                        grads: Dict[str, np.ndarray]) -> np.ndarray:
        """Accumulate decoder gradients; returns the cotangent of the encoding"""
        flat = logits_bar[..., 0]
        grads["decoder_enc"] += np.einsum("hw,hwd->d", flat, cache.encoding)
        grads["decoder_feat"] += np.einsum("hw,hwc->c", flat, cache.features)
        grads["decoder_bias"] += flat.sum()
        return flat[..., None] * self.params["decoder_enc"]

    def labels_backward(self, mask: np.ndarray, pre: Optional[np.ndarray], labels_bar: np.ndarray,
                        grads: Dict[str, np.ndarray]) -> None:
        if self.fixed_labels:
            return
        pre_bar = labels_bar * (pre > 0.0)
        k = self.params["label_kernel"].shape[0]
        grads["label_kernel"] += conv2d_transpose(pre_bar, mask, k)
        grads["label_bias"] += pre_bar.sum(axis=(0, 1))

    def importance_backward(self, mask: np.ndarray, importance_bar: np.ndarray,
                            grads: Dict[str, np.ndarray]) -> None:
        if not self.learns_weights:
            return
        k = self.params["weight_kernel"].shape[0]
        grads["weight_kernel"] += conv2d_transpose(importance_bar, mask, k)
        grads["weight_bias"] += importance_bar.sum(axis=(0, 1))

    def save(self, directory: str) -> str:
        """Write one LTT file per parameter plus a modules.json index"""
        os.makedirs(directory, exist_ok=True)
        index = {"fixed_labels": self.fixed_labels, "parameters": {}}
        for name, value in self.params.items():
            write_tensor(os.path.join(directory, f"{name}.ltt"), value)
            index["parameters"][name] = list(value.shape)
        path = os.path.join(directory, MANIFEST_NAME)
        with open(path, "w") as f:
            json.dump(index, f, indent=2)
        logger.info(f"Saved {len(self.params)} toy parameters to {directory}")
        return path


def load_modules(directory: str) -> ToyModules:
    with open(os.path.join(directory, MANIFEST_NAME), "r") as f:
        index = json.load(f)
    params = {}
    for name, shape in index["parameters"].items():
        value = read_tensor(os.path.join(directory, f"{name}.ltt"))
        if list(value.shape) != list(shape):
            raise DimensionError(f"parameter {name} has shape {value.shape}, index says {shape}")
        params[name] = value
    return ToyModules(params, fixed_labels=bool(index["fixed_labels"]))


def grad_norm(grads: Dict[str, np.ndarray], *names: str) -> float:
    total = sum(float(np.sum(grads[name] ** 2)) for name in names if name in grads)
    return float(np.sqrt(total))
