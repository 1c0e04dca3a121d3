"""MLP classifier trained by gradient descent on a differentiable MCC surrogate.

The network is a stack of tanh hidden layers feeding one sigmoid output unit.
Counting true positives and predicted positives through hard thresholds is
not differentiable, so both counts are replaced by sums of gamma-sharpened
sigmoids of the output logit; as gamma grows the surrogate converges to the
hard MCC. The loss is the negated surrogate plus an L2 term summing the
Euclidean norm of every weight matrix (biases excluded).

Binary cross-entropy is also provided, purely as a contrast: on heavily
imbalanced data it collapses to the all-majority predictor, which is the
failure mode the MCC surrogate exists to avoid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .features import FeatureSchema, Instance, NormStats, standardize_fit

MCC_EPS = 1e-7

MIN_LOG_RATE = 10**-2.5  # lower edge of the eta / lambda sampling range
ENSEMBLE_SIZE = 10


def sigmoid(x):
    """Logistic function, overflow-safe on both tails."""
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class HyperParams:
    eta: float  # learning rate
    l2: float  # regularization weight (0 disables the term)
    gamma: float  # surrogate sharpness
    hidden_sizes: tuple[int, ...]

    def validate(self):
        if not (MIN_LOG_RATE <= self.eta <= 1.0):
            raise ValueError(f"eta out of range: {self.eta}")
        if self.l2 != 0.0 and not (MIN_LOG_RATE <= self.l2 <= 1.0):
            raise ValueError(f"l2 out of range: {self.l2}")
        if not (1.0 <= self.gamma <= 10.0):
            raise ValueError(f"gamma out of range: {self.gamma}")
        _validate_hidden_sizes(self.hidden_sizes)

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "l2": self.l2,
            "gamma": self.gamma,
            "hidden_sizes": list(self.hidden_sizes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HyperParams":
        return cls(
            eta=float(data["eta"]),
            l2=float(data["l2"]),
            gamma=float(data["gamma"]),
            hidden_sizes=tuple(int(s) for s in data["hidden_sizes"]),
        )


def _validate_hidden_sizes(sizes: tuple[int, ...]):
    if not 1 <= len(sizes) <= 3:
        raise ValueError(f"need 1..3 hidden layers, got {len(sizes)}")
    for size in sizes:
        if not 4 <= size <= 100:
            raise ValueError(f"hidden size out of [4, 100]: {size}")
    if any(b > a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"hidden sizes must be non-increasing: {sizes}")


@dataclass
class MlpModel:
    schema: FeatureSchema
    hyper: HyperParams
    weights: list[np.ndarray]  # L hidden matrices plus the output matrix
    biases: list[np.ndarray]
    norm_stats: NormStats

    def __post_init__(self):
        _validate_hidden_sizes(tuple(w.shape[1] for w in self.weights[:-1]))
        for w_in, w_out in zip(self.weights, self.weights[1:]):
            if w_in.shape[1] != w_out.shape[0]:
                raise ValueError("adjacent layer dimensions are incompatible")

    @property
    def dtype(self):
        return self.weights[0].dtype


@dataclass
class MlpEnsemble:
    """Exactly ten independently initialized networks sharing normalization."""

    members: list[MlpModel]
    norm_stats: NormStats

    def __post_init__(self):
        if len(self.members) != ENSEMBLE_SIZE:
            raise ValueError(f"ensemble needs exactly {ENSEMBLE_SIZE} members")
        schemas = {m.schema for m in self.members}
        if len(schemas) != 1:
            raise ValueError("ensemble members must share one schema")

    @property
    def schema(self) -> FeatureSchema:
        return self.members[0].schema


# ---------------------------------------------------------------------------
# Array plumbing
# ---------------------------------------------------------------------------


def instances_to_arrays(instances: list[Instance], dtype=np.float64):
    X = np.array([inst.features.values for inst in instances], dtype=dtype)
    labels = [inst.label for inst in instances]
    if any(label is None for label in labels):
        raise ValueError("all instances must be labeled")
    y = np.array(labels, dtype=dtype)
    return X, y


def _standardize_matrix(X: np.ndarray, stats: NormStats) -> np.ndarray:
    means = np.asarray(stats.means, dtype=X.dtype)
    stds = np.asarray(stats.stds, dtype=X.dtype)
    scale = np.where(stds > 0, stds, 1.0).astype(X.dtype)
    return (X - means) / scale


def _forward_arrays(weights, biases, X):
    """Activations of every layer; returns (hidden activations, logits)."""
    hidden = []
    a = X
    for W, b in zip(weights[:-1], biases[:-1]):
        a = np.tanh(a @ W + b)
        hidden.append(a)
    z = (a @ weights[-1] + biases[-1]).ravel()
    return hidden, z


def forward(model: MlpModel, features, return_logit: bool = False):
    """Predicted probability for one raw feature vector or a matrix of them.

    Standardizes the input with the model's stored statistics first.
    """
    single = hasattr(features, "values")
    if single:
        if features.schema is not model.schema:
            raise ValueError(f"schema mismatch: {features.schema} vs {model.schema}")
        X = np.array([features.values], dtype=model.dtype)
    else:
        X = np.asarray(features, dtype=model.dtype)
        if X.ndim == 1:
            X = X[None, :]
            single = True
    if X.shape[1] != model.weights[0].shape[0]:
        raise ValueError(
            f"feature width {X.shape[1]} does not match model input {model.weights[0].shape[0]}"
        )
    _, z = _forward_arrays(model.weights, model.biases, _standardize_matrix(X, model.norm_stats))
    p = sigmoid(z)
    if single:
        p, z = float(p[0]), float(z[0])
    if return_logit:
        return p, z
    return p


# ---------------------------------------------------------------------------
# Surrogate MCC loss and gradients
# ---------------------------------------------------------------------------


def _surrogate_mcc_from_logits(z, y, gamma, eps=MCC_EPS):
    """Surrogate MCC plus d(surrogate)/dz for backpropagation.

    true positives ~= sum over positives of sigmoid(gamma z);
    predicted positives ~= sum over all of sigmoid(gamma z);
    the remaining confusion-matrix margins are exact label counts.
    """
    n = float(len(y))
    n_pos = float(y.sum())
    n_neg = n - n_pos
    s = sigmoid(gamma * z)
    tp = float((s * y).sum())
    m_pos = float(s.sum())
    numerator = tp * n - n_pos * m_pos
    product = n_pos * n_neg * m_pos * (n - m_pos) + eps
    inv_sqrt = product**-0.5
    mcc = numerator * inv_sqrt
    # dMCC/ds_i = n*[y_i]/sqrt(P) - n_pos/sqrt(P) - N * nneg*npos*(n-2m)/2 P^-3/2
    d_m_pos = -n_pos * inv_sqrt - 0.5 * numerator * inv_sqrt**3 * n_pos * n_neg * (n - 2.0 * m_pos)
    d_s = n * inv_sqrt * y + d_m_pos
    dz = d_s * gamma * s * (1.0 - s)
    return mcc, dz


def surrogate_mcc(model: MlpModel, batch: list[Instance], gamma: float) -> float:
    """Differentiable MCC of the model on a labeled batch; exactly 0 on a
    single-class batch (degenerate, the margins collapse)."""
    X, y = instances_to_arrays(batch, dtype=model.dtype)
    _, z = _forward_arrays(model.weights, model.biases, _standardize_matrix(X, model.norm_stats))
    mcc, _ = _surrogate_mcc_from_logits(z, y, gamma)
    return float(mcc)


def _l2_term(weights, l2):
    if l2 == 0.0:
        return 0.0
    return l2 * sum(float(np.sqrt((W * W).sum())) for W in weights)


def _loss_and_grads(weights, biases, X, y, gamma, l2, loss_kind="mcc"):
    hidden, z = _forward_arrays(weights, biases, X)
    if loss_kind == "mcc":
        mcc, dz = _surrogate_mcc_from_logits(z, y, gamma)
        loss_val = -mcc
        dz = -dz
    elif loss_kind == "cross_entropy":
        n = len(y)
        loss_val = float((np.logaddexp(0.0, -z) + (1.0 - y) * z).sum()) / n
        dz = (sigmoid(z) - y) / n
    else:
        raise ValueError(f"unknown loss kind: {loss_kind!r}")
    loss_val += _l2_term(weights, l2)

    grads_w = [None] * len(weights)
    grads_b = [None] * len(biases)
    layer_inputs = [X] + hidden
    delta = dz[:, None]
    grads_w[-1] = layer_inputs[-1].T @ delta
    grads_b[-1] = delta.sum(axis=0)
    upstream = delta @ weights[-1].T
    for l in range(len(hidden) - 1, -1, -1):
        da = upstream * (1.0 - hidden[l] * hidden[l])
        grads_w[l] = layer_inputs[l].T @ da
        grads_b[l] = da.sum(axis=0)
        if l > 0:
            upstream = da @ weights[l].T
    if l2 != 0.0:
        for l, W in enumerate(weights):
            norm = np.sqrt((W * W).sum())
            if norm > 0:
                grads_w[l] = grads_w[l] + (l2 / norm) * W
    return loss_val, grads_w, grads_b


def loss(model: MlpModel, batch: list[Instance], hp: HyperParams) -> float:
    """Negated surrogate MCC plus the L2 penalty."""
    X, y = instances_to_arrays(batch, dtype=model.dtype)
    Xs = _standardize_matrix(X, model.norm_stats)
    _, z = _forward_arrays(model.weights, model.biases, Xs)
    mcc, _ = _surrogate_mcc_from_logits(z, y, hp.gamma)
    return float(-mcc + _l2_term(model.weights, hp.l2))


def gradient(model: MlpModel, batch: list[Instance], hp: HyperParams):
    """Analytic gradient of `loss` for every weight matrix and bias vector."""
    X, y = instances_to_arrays(batch, dtype=model.dtype)
    Xs = _standardize_matrix(X, model.norm_stats)
    _, grads_w, grads_b = _loss_and_grads(model.weights, model.biases, Xs, y, hp.gamma, hp.l2)
    return grads_w, grads_b


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def learning_rate_at(eta: float, epoch: int, decay_epoch: int = 100, halflife: float = 20.0) -> float:
    """Flat until `decay_epoch`, then exponential halving every `halflife` epochs."""
    if epoch <= decay_epoch:
        return eta
    return eta * 0.5 ** ((epoch - decay_epoch) / halflife)


def _init_layers(layer_dims, rng, dtype):
    weights = []
    biases = []
    for fan_in, fan_out in zip(layer_dims, layer_dims[1:]):
        std = 1.0 / np.sqrt(fan_in)
        weights.append(rng.normal(0.0, std, size=(fan_in, fan_out)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return weights, biases


def train(
    dataset: list[Instance],
    hp: HyperParams,
    seed,
    epochs: int = 120,
    decay_epoch: int = 100,
    decay_halflife: float = 20.0,
    loss_kind: str = "mcc",
    norm_stats: NormStats | None = None,
    dtype=np.float64,
) -> MlpModel:
    """Full-batch gradient descent for `epochs` epochs; deterministic given seed.

    Weights start Gaussian with stddev 1/sqrt(fan_in); the learning rate stays
    at hp.eta until `decay_epoch` and then halves every `decay_halflife` epochs.
    Normalization statistics are fitted on the dataset unless provided.
    """
    hp.validate()
    if not dataset:
        raise ValueError("empty training set")
    labels = {inst.label for inst in dataset}
    if labels != {0, 1}:
        raise ValueError(f"training set must contain both labels, got {sorted(labels)}")
    schema = dataset[0].features.schema
    if norm_stats is None:
        norm_stats = standardize_fit([inst.features for inst in dataset])
    X, y = instances_to_arrays(dataset, dtype=dtype)
    Xs = _standardize_matrix(X, norm_stats)

    rng = np.random.default_rng(seed)
    layer_dims = (X.shape[1],) + tuple(hp.hidden_sizes) + (1,)
    weights, biases = _init_layers(layer_dims, rng, dtype)

    for epoch in range(1, epochs + 1):
        _, grads_w, grads_b = _loss_and_grads(weights, biases, Xs, y, hp.gamma, hp.l2, loss_kind)
        lr = learning_rate_at(hp.eta, epoch, decay_epoch, decay_halflife)
        for W, gW in zip(weights, grads_w):
            W -= lr * gW
        for b, gb in zip(biases, grads_b):
            b -= lr * gb
    return MlpModel(schema=schema, hyper=hp, weights=weights, biases=biases, norm_stats=norm_stats)


def train_ensemble(
    dataset: list[Instance],
    hp: HyperParams,
    seed,
    epochs: int = 120,
    decay_epoch: int = 100,
    decay_halflife: float = 20.0,
    dtype=np.float64,
) -> MlpEnsemble:
    """Ten networks trained on the same data with member seeds (seed, index),
    sharing one set of normalization statistics."""
    norm_stats = standardize_fit([inst.features for inst in dataset])
    members = [
        train(
            dataset,
            hp,
            seed=(seed, index),
            epochs=epochs,
            decay_epoch=decay_epoch,
            decay_halflife=decay_halflife,
            norm_stats=norm_stats,
            dtype=dtype,
        )
        for index in range(ENSEMBLE_SIZE)
    ]
    return MlpEnsemble(members=members, norm_stats=norm_stats)


def boosted_predict(ensemble: MlpEnsemble, features) -> tuple[float, bool]:
    """Average of the member probabilities; flagged on strictly > 0.5."""
    probability = sum(forward(member, features) for member in ensemble.members) / len(
        ensemble.members
    )
    return probability, probability > 0.5


def boosted_predict_matrix(ensemble: MlpEnsemble, X) -> np.ndarray:
    """Vectorized member-averaged probabilities for a raw feature matrix."""
    total = None
    for member in ensemble.members:
        p = forward(member, X)
        total = p if total is None else total + p
    return total / len(ensemble.members)


# ---------------------------------------------------------------------------
# Preallocated fast trainer (harness hot path)
# ---------------------------------------------------------------------------


try:
    from . import _fastpath
except ImportError:  # numba unavailable: the numpy fallback below still works
    _fastpath = None


def fast_train_arrays(
    Xs: np.ndarray,
    y: np.ndarray,
    hp: HyperParams,
    seed,
    epochs: int,
    decay_epoch: int = 100,
    decay_halflife: float = 20.0,
    dtype=np.float32,
):
    """Same descent as `train` on an already-standardized matrix, with all
    layer-sized buffers allocated once and the element-wise backward fused
    (numba when available). The tuning protocol trains thousands of small
    networks; the reference path spends most of its time on intermediate
    arrays. Returns (weights, biases); initialization and schedule match
    `train` exactly, gradients agree to float precision.
    """
    hp.validate()
    Xs = np.ascontiguousarray(Xs, dtype=dtype)
    y = np.asarray(y, dtype=dtype)
    n, width = Xs.shape
    n_f = float(n)
    n_pos = float(y.sum())
    n_neg = n_f - n_pos
    if n_pos == 0.0 or n_neg == 0.0:
        raise ValueError("training set must contain both labels")

    rng = np.random.default_rng(seed)
    dims = (width,) + tuple(hp.hidden_sizes) + (1,)
    weights, biases = _init_layers(dims, rng, dtype)
    depth = len(hp.hidden_sizes)

    acts = [np.empty((n, dims[l + 1]), dtype=dtype) for l in range(depth)]
    das = [np.empty((n, dims[l + 1]), dtype=dtype) for l in range(depth)]
    zcol = np.empty((n, 1), dtype=dtype)
    dz = np.empty(n, dtype=dtype)
    grads_w = [np.empty_like(W) for W in weights]
    grads_b = [np.empty_like(b) for b in biases]
    gamma = hp.gamma
    l2 = hp.l2
    fused = _fastpath is not None

    for epoch in range(1, epochs + 1):
        a = Xs
        for l in range(depth):
            np.matmul(a, weights[l], out=acts[l])
            acts[l] += biases[l]
            np.tanh(acts[l], out=acts[l])
            a = acts[l]
        np.matmul(a, weights[-1], out=zcol)
        zcol += biases[-1]
        z = zcol.ravel()

        if fused:
            _fastpath.surrogate_dz(z, y, dtype(gamma), dtype(n_pos), dtype(n_neg), dtype(MCC_EPS), dz)
        else:
            s = sigmoid(gamma * z)
            tp = float(s @ y)
            m_pos = float(s.sum())
            numerator = tp * n_f - n_pos * m_pos
            product = n_pos * n_neg * m_pos * (n_f - m_pos) + MCC_EPS
            inv_sqrt = product**-0.5
            d_m_pos = -n_pos * inv_sqrt - 0.5 * numerator * inv_sqrt**3 * n_pos * n_neg * (
                n_f - 2.0 * m_pos
            )
            dz[:] = -((n_f * inv_sqrt) * y + d_m_pos) * gamma * s * (1.0 - s)

        np.matmul(a.T, dz[:, None], out=grads_w[-1])
        grads_b[-1][0] = dz.sum()
        for l in range(depth - 1, -1, -1):
            if l == depth - 1:
                if fused:
                    _fastpath.backward_output(dz, weights[-1], acts[l], das[l], grads_b[l])
                else:
                    np.multiply(dz[:, None], weights[-1].T, out=das[l])
                    das[l] *= 1.0 - acts[l] * acts[l]
                    das[l].sum(axis=0, out=grads_b[l])
            else:
                np.matmul(das[l + 1], weights[l + 1].T, out=das[l])
                if fused:
                    _fastpath.backward_hidden(das[l], acts[l], grads_b[l])
                else:
                    das[l] *= 1.0 - acts[l] * acts[l]
                    das[l].sum(axis=0, out=grads_b[l])
            source = Xs if l == 0 else acts[l - 1]
            np.matmul(source.T, das[l], out=grads_w[l])

        lr = learning_rate_at(hp.eta, epoch, decay_epoch, decay_halflife)
        for l, W in enumerate(weights):
            if l2 != 0.0:
                norm = float(np.sqrt((W * W).sum()))
                if norm > 0:
                    grads_w[l] += (l2 / norm) * W
            W -= lr * grads_w[l]
        for b, gb in zip(biases, grads_b):
            b -= lr * gb
    return weights, biases


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------


def _model_to_dict(model: MlpModel) -> dict:
    return {
        "schema": model.schema.value,
        "hyper_params": model.hyper.to_dict(),
        "dtype": str(model.dtype),
        "norm_stats": {"means": list(model.norm_stats.means), "stds": list(model.norm_stats.stds)},
        "weights": [W.tolist() for W in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }


def _model_from_dict(data: dict) -> MlpModel:
    schema = FeatureSchema(data["schema"])
    dtype = np.dtype(data["dtype"])
    stats = NormStats(
        schema=schema,
        means=tuple(data["norm_stats"]["means"]),
        stds=tuple(data["norm_stats"]["stds"]),
    )
    return MlpModel(
        schema=schema,
        hyper=HyperParams.from_dict(data["hyper_params"]),
        weights=[np.array(W, dtype=dtype) for W in data["weights"]],
        biases=[np.array(b, dtype=dtype) for b in data["biases"]],
        norm_stats=stats,
    )


def save_ensemble(ensemble: MlpEnsemble, path):
    data = {
        "schema": ensemble.schema.value,
        "norm_stats": {
            "means": list(ensemble.norm_stats.means),
            "stds": list(ensemble.norm_stats.stds),
        },
        "members": [_model_to_dict(m) for m in ensemble.members],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh)


def load_ensemble(path) -> MlpEnsemble:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    schema = FeatureSchema(data["schema"])
    stats = NormStats(
        schema=schema,
        means=tuple(data["norm_stats"]["means"]),
        stds=tuple(data["norm_stats"]["stds"]),
    )
    return MlpEnsemble(members=[_model_from_dict(m) for m in data["members"]], norm_stats=stats)
