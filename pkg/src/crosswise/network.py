"""Networks of dense and diagonal-weight layers: forward, backprop, SGD.

Layer kinds:

* ``dense`` — full weight matrix, ``out = act(W x + b)``.
* ``crosswise`` — learned diagonal coefficients only (see `diagonal`).
* ``crosswise_mixed`` — a fixed, non-learned mixing stage (sign-flip diagonal,
  Walsh-Hadamard transform, seeded permutation, scaled by 1/sqrt(pad) so the
  stage is an isometry) followed by a learned crosswise map.  Only the
  diagonal coefficients and biases are learned, so the parameter count matches
  the plain crosswise layer on the padded dimension.

``softmax_output`` is an identity at forward time: the layer emits logits and
the cross-entropy loss applies a stabilized softmax internally, which yields
the usual fused gradient (softmax(logits) - target).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diagonal import (
    CrosswiseWeights,
    block_count,
    crosswise_backward,
    crosswise_forward,
    init_crosswise,
)
from .errors import DivergenceError, ParameterError, ShapeError
from .features import fwht, next_power_of_two
from .rng import CounterRng, derive_seed

LAYER_KINDS = ("dense", "crosswise", "crosswise_mixed")
NETWORK_ACTIVATIONS = ("relu", "identity", "softmax_output")
LOSS_KINDS = ("mse", "cross_entropy")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_dim: int
    out_dim: int
    activation: str = "relu"

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ParameterError(f"layer kind must be one of {LAYER_KINDS}, got {self.kind!r}")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ParameterError(
                f"layer dims must be positive, got {self.in_dim}x{self.out_dim}"
            )
        if self.activation not in NETWORK_ACTIVATIONS:
            raise ParameterError(
                f"activation must be one of {NETWORK_ACTIVATIONS}, got {self.activation!r}"
            )


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple[LayerSpec, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ParameterError("network needs at least one layer")
        for i in range(len(self.layers) - 1):
            if self.layers[i].out_dim != self.layers[i + 1].in_dim:
                raise ShapeError(
                    f"layer {i} out_dim {self.layers[i].out_dim} does not chain "
                    f"into layer {i + 1} in_dim {self.layers[i + 1].in_dim}"
                )
            if self.layers[i].activation == "softmax_output":
                raise ParameterError(
                    f"softmax_output is only allowed on the final layer (found on layer {i})"
                )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    epochs: int
    batch_size: int
    loss: str
    seed: int

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ParameterError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ParameterError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be positive, got {self.batch_size}")
        if self.loss not in LOSS_KINDS:
            raise ParameterError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    wall_ms: float


TrainHistory = list  # of EpochRecord


def _inner_activation(activation: str) -> str:
    return "identity" if activation == "softmax_output" else activation


class DenseLayer:
    kind = "dense"

    def __init__(self, spec: LayerSpec, w: np.ndarray, b: np.ndarray):
        if w.shape != (spec.out_dim, spec.in_dim):
            raise ShapeError(
                f"dense weights must be {spec.out_dim}x{spec.in_dim}, got {w.shape}"
            )
        if b.shape != (spec.out_dim,):
            raise ShapeError(f"dense bias must have length {spec.out_dim}, got {b.shape}")
        self.spec = spec
        self.w = np.asarray(w, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)

    def params(self) -> dict:
        return {"w": self.w, "b": self.b}

    def forward(self, x: np.ndarray):
        if x.shape != (self.spec.in_dim,):
            raise ShapeError(
                f"expected input of length {self.spec.in_dim}, got {x.shape}"
            )
        pre = self.w @ x + self.b
        out = np.maximum(pre, 0.0) if self.spec.activation == "relu" else pre
        return out, (x, pre)

    def backward(self, cache, g_out: np.ndarray):
        x, pre = cache
        if self.spec.activation == "relu":
            g_pre = np.where(pre > 0.0, g_out, 0.0)
        else:
            g_pre = g_out
        grads = {"w": np.outer(g_pre, x), "b": g_pre.copy()}
        return grads, self.w.T @ g_pre

    @property
    def weight_count(self) -> int:
        return self.spec.in_dim * self.spec.out_dim

    @property
    def mult_count(self) -> int:
        return self.spec.in_dim * self.spec.out_dim

    @property
    def fwht_ops(self) -> int:
        return 0


class CrosswiseLayer:
    kind = "crosswise"

    def __init__(self, spec: LayerSpec, weights: CrosswiseWeights):
        if weights.in_dim != spec.in_dim or weights.out_dim != spec.out_dim:
            raise ShapeError(
                f"crosswise weights are {weights.in_dim}->{weights.out_dim}, "
                f"spec says {spec.in_dim}->{spec.out_dim}"
            )
        self.spec = spec
        self.weights = weights

    def params(self) -> dict:
        return {"c": self.weights.c, "b": self.weights.b}

    def forward(self, x: np.ndarray):
        out = crosswise_forward(self.weights, x, _inner_activation(self.spec.activation))
        return out, x

    def backward(self, cache, g_out: np.ndarray):
        x = cache
        grad_c, grad_b, grad_x = crosswise_backward(
            self.weights, x, g_out, _inner_activation(self.spec.activation)
        )
        return {"c": grad_c, "b": grad_b}, grad_x

    @property
    def weight_count(self) -> int:
        return self.weights.k * self.weights.in_dim

    @property
    def mult_count(self) -> int:
        return self.weights.k * self.weights.in_dim

    @property
    def fwht_ops(self) -> int:
        return 0


class CrosswiseMixedLayer:
    """Fixed isometric mixing (signs, FWHT, permutation, 1/sqrt(pad)) then crosswise."""

    kind = "crosswise_mixed"

    def __init__(self, spec: LayerSpec, weights: CrosswiseWeights,
                 signs: np.ndarray, perm: np.ndarray):
        pad = next_power_of_two(spec.in_dim)
        if weights.in_dim != pad or weights.out_dim != spec.out_dim:
            raise ShapeError(
                f"mixed-layer weights are {weights.in_dim}->{weights.out_dim}, "
                f"expected {pad}->{spec.out_dim}"
            )
        signs = np.asarray(signs, dtype=np.float64)
        perm = np.asarray(perm, dtype=np.int64)
        if signs.shape != (pad,):
            raise ShapeError(f"signs must have length {pad}, got {signs.shape}")
        if not np.array_equal(np.sort(perm), np.arange(pad)):
            raise ParameterError("perm must be a permutation of 0..pad-1")
        if not np.all(np.abs(signs) == 1.0):
            raise ParameterError("signs entries must be +1 or -1")
        self.spec = spec
        self.pad = pad
        self.weights = weights
        self.signs = signs
        self.perm = perm
        self._scale = 1.0 / math.sqrt(pad)

    def params(self) -> dict:
        return {"c": self.weights.c, "b": self.weights.b}

    def _mix(self, x: np.ndarray) -> np.ndarray:
        padded = np.zeros(self.pad)
        padded[: x.shape[0]] = x
        return fwht(self.signs * padded)[self.perm] * self._scale

    def forward(self, x: np.ndarray):
        if x.shape != (self.spec.in_dim,):
            raise ShapeError(
                f"expected input of length {self.spec.in_dim}, got {x.shape}"
            )
        u = self._mix(x)
        out = crosswise_forward(self.weights, u, _inner_activation(self.spec.activation))
        return out, u

    def backward(self, cache, g_out: np.ndarray):
        u = cache
        grad_c, grad_b, grad_u = crosswise_backward(
            self.weights, u, g_out, _inner_activation(self.spec.activation)
        )
        # Transpose of the mixing stage: unscale, unpermute, FWHT (symmetric),
        # sign-flip, then drop the padding coordinates.
        g_v = np.zeros(self.pad)
        g_v[self.perm] = grad_u * self._scale
        g_x = (self.signs * fwht(g_v))[: self.spec.in_dim]
        return {"c": grad_c, "b": grad_b}, g_x

    def mixing_as_dense(self) -> np.ndarray:
        """Explicit pad x in_dim matrix of the fixed mixing stage (oracle hook)."""
        cols = []
        for j in range(self.spec.in_dim):
            e = np.zeros(self.spec.in_dim)
            e[j] = 1.0
            cols.append(self._mix(e))
        return np.stack(cols, axis=1)

    @property
    def weight_count(self) -> int:
        return self.weights.k * self.pad

    @property
    def mult_count(self) -> int:
        # pad sign flips plus the learned diagonal products.
        return self.pad + self.weights.k * self.pad

    @property
    def fwht_ops(self) -> int:
        return self.pad * int(math.log2(self.pad))


def build_network(spec: NetworkSpec) -> "Network":
    """Instantiate seeded parameters; layer i draws from derive_seed(spec.seed, i)."""
    layers = []
    for i, lspec in enumerate(spec.layers):
        lseed = derive_seed(spec.seed, i)
        if lspec.kind == "dense":
            rng = CounterRng(lseed, stream=0)
            w = rng.uniform(lspec.out_dim * lspec.in_dim, -1.0, 1.0)
            w = w.reshape(lspec.out_dim, lspec.in_dim) / math.sqrt(lspec.in_dim)
            layers.append(DenseLayer(lspec, w, np.zeros(lspec.out_dim)))
        elif lspec.kind == "crosswise":
            layers.append(CrosswiseLayer(lspec, init_crosswise(lseed, lspec.in_dim, lspec.out_dim)))
        else:
            pad = next_power_of_two(lspec.in_dim)
            weights = init_crosswise(lseed, pad, lspec.out_dim)
            fixed = CounterRng(lseed, stream=1)
            signs = fixed.rademacher(pad)
            perm = fixed.permutation(pad)
            layers.append(CrosswiseMixedLayer(lspec, weights, signs, perm))
    return Network(spec, layers)


class Network:
    def __init__(self, spec: NetworkSpec, layers: list):
        if len(layers) != len(spec.layers):
            raise ShapeError(
                f"spec has {len(spec.layers)} layers but {len(layers)} were built"
            )
        self.spec = spec
        self.layers = layers

    @property
    def in_dim(self) -> int:
        return self.spec.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.spec.layers[-1].out_dim


def network_forward(net: Network, x: np.ndarray) -> np.ndarray:
    out = np.asarray(x, dtype=np.float64)
    for i, layer in enumerate(net.layers):
        try:
            out, _ = layer.forward(out)
        except ShapeError as exc:
            raise ShapeError(f"layer {i}: {exc}") from exc
    return out


def _forward_with_caches(net: Network, x: np.ndarray):
    out = np.asarray(x, dtype=np.float64)
    caches = []
    for i, layer in enumerate(net.layers):
        try:
            out, cache = layer.forward(out)
        except ShapeError as exc:
            raise ShapeError(f"layer {i}: {exc}") from exc
        caches.append(cache)
    return out, caches


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - np.max(z)
    e = np.exp(shifted)
    return e / np.sum(e)


def _check_one_hot(target: np.ndarray):
    if not (np.all((target == 0.0) | (target == 1.0)) and np.sum(target) == 1.0):
        raise ParameterError("cross_entropy target must be one-hot")


def loss_eval(kind: str, prediction: np.ndarray, target: np.ndarray) -> float:
    if kind not in LOSS_KINDS:
        raise ParameterError(f"loss must be one of {LOSS_KINDS}, got {kind!r}")
    prediction = np.asarray(prediction, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ShapeError(
            f"prediction length {prediction.shape} != target length {target.shape}"
        )
    if kind == "mse":
        diff = prediction - target
        return float(np.mean(diff * diff))
    _check_one_hot(target)
    # -log softmax(prediction)[hot] with log-sum-exp stabilization.
    shifted = prediction - np.max(prediction)
    log_norm = math.log(np.sum(np.exp(shifted)))
    return float(log_norm - shifted[np.argmax(target)])


def _loss_gradient(kind: str, prediction: np.ndarray, target: np.ndarray) -> np.ndarray:
    if kind == "mse":
        return 2.0 * (prediction - target) / prediction.shape[0]
    _check_one_hot(target)
    return softmax(prediction) - target


def network_backward(net: Network, x: np.ndarray, target: np.ndarray, loss_kind: str) -> list:
    """Per-layer gradient dicts (same keys/shapes as each layer's params())."""
    grads, _ = _backward_with_loss(net, x, target, loss_kind)
    return grads


def _backward_with_loss(net: Network, x, target, loss_kind):
    target = np.asarray(target, dtype=np.float64)
    prediction, caches = _forward_with_caches(net, x)
    loss = loss_eval(loss_kind, prediction, target)
    g = _loss_gradient(loss_kind, prediction, target)
    grads: list = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        grads[i], g = net.layers[i].backward(caches[i], g)
    return grads, loss


def sgd_step(net: Network, grads: list, learning_rate: float) -> Network:
    if len(grads) != len(net.layers):
        raise ShapeError(f"{len(grads)} gradient sets for {len(net.layers)} layers")
    for i, layer in enumerate(net.layers):
        params = layer.params()
        for name, p in params.items():
            g = grads[i][name]
            if g.shape != p.shape:
                raise ShapeError(
                    f"layer {i} grad {name!r} has shape {g.shape}, parameter is {p.shape}"
                )
            p -= learning_rate * g
    return net


def _targets_for(data, out_dim: int) -> list:
    if data.class_count > 0:
        if data.class_count != out_dim:
            raise ShapeError(
                f"dataset has {data.class_count} classes but the network emits {out_dim}"
            )
        targets = []
        for label in data.labels:
            t = np.zeros(out_dim)
            t[int(label)] = 1.0
            targets.append(t)
        return targets
    if out_dim != 1:
        raise ShapeError(
            f"regression targets are scalar but the network emits {out_dim}"
        )
    return [np.array([float(v)]) for v in data.labels]


def _accuracy(net: Network, data) -> float:
    if data.class_count == 0:
        return 0.0
    hits = 0
    for row, label in zip(data.features, data.labels):
        if int(np.argmax(network_forward(net, row))) == int(label):
            hits += 1
    return hits / data.features.shape[0]


def train_network(net: Network, cfg: TrainConfig, data, threads: int = 1) -> list:
    """Mutates net in place; returns the per-epoch history."""
    n = data.features.shape[0]
    if cfg.batch_size > n:
        raise ParameterError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")
    if data.features.shape[1] != net.in_dim:
        raise ShapeError(
            f"dataset features have {data.features.shape[1]} columns, network expects {net.in_dim}"
        )
    targets = _targets_for(data, net.out_dim)
    history: list = []

    def sample_grads(idx: int):
        return _backward_with_loss(net, data.features[idx], targets[idx], cfg.loss)

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for epoch in range(1, cfg.epochs + 1):
            started = time.perf_counter()
            order = CounterRng(cfg.seed, stream=epoch).permutation(n)
            loss_sum = 0.0
            for start in range(0, n, cfg.batch_size):
                batch = [int(i) for i in order[start : start + cfg.batch_size]]
                if pool is not None:
                    results = list(pool.map(sample_grads, batch))
                else:
                    results = [sample_grads(i) for i in batch]
                # Reduce in sample-index order regardless of worker count.
                avg = None
                batch_loss = 0.0
                for grads, loss in results:
                    batch_loss += loss
                    if avg is None:
                        avg = [{k: v.copy() for k, v in g.items()} for g in grads]
                    else:
                        for acc, g in zip(avg, grads):
                            for k in acc:
                                acc[k] += g[k]
                scale = 1.0 / len(batch)
                for acc in avg:
                    for k in acc:
                        acc[k] *= scale
                batch_loss *= scale
                if not math.isfinite(batch_loss):
                    raise DivergenceError(f"non-finite loss at epoch {epoch}")
                sgd_step(net, avg, cfg.learning_rate)
                loss_sum += batch_loss * len(batch)
            epoch_loss = loss_sum / n
            if not math.isfinite(epoch_loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            history.append(
                EpochRecord(
                    epoch=epoch,
                    train_loss=epoch_loss,
                    train_accuracy=_accuracy(net, data),
                    wall_ms=(time.perf_counter() - started) * 1e3,
                )
            )
    finally:
        if pool is not None:
            pool.shutdown()
    return history


def train(spec: NetworkSpec, cfg: TrainConfig, data) -> list:
    """Build a fresh network from spec and train it; returns the history."""
    net = build_network(spec)
    return train_network(net, cfg, data)


@dataclass
class ParamCounts:
    weights: list
    biases: list

    @property
    def total_weights(self) -> int:
        return sum(self.weights)

    @property
    def total_biases(self) -> int:
        return sum(self.biases)


@dataclass
class MultCounts:
    mults: list
    fwht_ops: list

    @property
    def total_mults(self) -> int:
        return sum(self.mults)

    @property
    def total_fwht_ops(self) -> int:
        return sum(self.fwht_ops)


def _layer_weight_count(lspec: LayerSpec) -> int:
    if lspec.kind == "dense":
        return lspec.in_dim * lspec.out_dim
    if lspec.kind == "crosswise":
        return block_count(lspec.in_dim, lspec.out_dim) * lspec.in_dim
    pad = next_power_of_two(lspec.in_dim)
    return block_count(pad, lspec.out_dim) * pad


def count_weights(spec: NetworkSpec) -> ParamCounts:
    """Learned multiplicative weights per layer; biases reported separately."""
    return ParamCounts(
        weights=[_layer_weight_count(l) for l in spec.layers],
        biases=[l.out_dim for l in spec.layers],
    )


def count_mults(spec: NetworkSpec) -> MultCounts:
    """Multiplications per forward pass; FWHT add/subtract pairs in their own column."""
    mults = []
    fwht_ops = []
    for lspec in spec.layers:
        if lspec.kind == "dense":
            mults.append(lspec.in_dim * lspec.out_dim)
            fwht_ops.append(0)
        elif lspec.kind == "crosswise":
            mults.append(block_count(lspec.in_dim, lspec.out_dim) * lspec.in_dim)
            fwht_ops.append(0)
        else:
            pad = next_power_of_two(lspec.in_dim)
            # The fixed sign diagonal costs pad multiplications on top of the
            # learned diagonal products; butterfly ops are counted separately.
            mults.append(pad + block_count(pad, lspec.out_dim) * pad)
            fwht_ops.append(pad * int(math.log2(pad)))
    return MultCounts(mults=mults, fwht_ops=fwht_ops)


def model_to_json(net: Network) -> dict:
    layers = []
    for layer in net.layers:
        if layer.kind == "dense":
            layers.append({
                "type": "dense",
                "n": layer.spec.in_dim,
                "m": layer.spec.out_dim,
                "w": [float(v) for v in layer.w.reshape(-1)],
                "b": [float(v) for v in layer.b],
                "activation": layer.spec.activation,
            })
        elif layer.kind == "crosswise":
            layers.append({
                "type": "crosswise",
                "n": layer.spec.in_dim,
                "m": layer.spec.out_dim,
                "k": layer.weights.k,
                "c": [float(v) for v in layer.weights.c],
                "b": [float(v) for v in layer.weights.b],
                "activation": layer.spec.activation,
            })
        else:
            layers.append({
                "type": "crosswise_mixed",
                "n": layer.spec.in_dim,
                "m": layer.spec.out_dim,
                "pad": layer.pad,
                "k": layer.weights.k,
                "c": [float(v) for v in layer.weights.c],
                "b": [float(v) for v in layer.weights.b],
                "signs": [int(v) for v in layer.signs],
                "perm": [int(v) for v in layer.perm],
                "activation": layer.spec.activation,
            })
    return {"version": 1, "layers": layers}


def model_from_json(doc: dict, seed: int = 0) -> Network:
    if doc.get("version") != 1:
        raise ParameterError(f"unsupported model version {doc.get('version')!r}")
    specs = []
    layers = []
    for entry in doc["layers"]:
        kind = entry["type"]
        lspec = LayerSpec(kind=kind, in_dim=int(entry["n"]), out_dim=int(entry["m"]),
                          activation=entry.get("activation", "relu"))
        if kind == "dense":
            w = np.array(entry["w"], dtype=np.float64).reshape(lspec.out_dim, lspec.in_dim)
            layers.append(DenseLayer(lspec, w, np.array(entry["b"], dtype=np.float64)))
        elif kind == "crosswise":
            weights = CrosswiseWeights(
                in_dim=lspec.in_dim, out_dim=lspec.out_dim, k=int(entry["k"]),
                c=np.array(entry["c"], dtype=np.float64),
                b=np.array(entry["b"], dtype=np.float64),
            )
            layers.append(CrosswiseLayer(lspec, weights))
        elif kind == "crosswise_mixed":
            pad = int(entry["pad"])
            weights = CrosswiseWeights(
                in_dim=pad, out_dim=lspec.out_dim, k=int(entry["k"]),
                c=np.array(entry["c"], dtype=np.float64),
                b=np.array(entry["b"], dtype=np.float64),
            )
            layers.append(CrosswiseMixedLayer(
                lspec, weights,
                np.array(entry["signs"], dtype=np.float64),
                np.array(entry["perm"], dtype=np.int64),
            ))
        else:
            raise ParameterError(f"unknown layer type {kind!r}")
        specs.append(lspec)
    return Network(NetworkSpec(layers=tuple(specs), seed=seed), layers)
