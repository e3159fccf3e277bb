"""Dense feedforward networks with hand-written exact gradients.

Everything the training stack needs from a neural library, in plain numpy:
forward passes with cached activations, reverse-mode gradients w.r.t.
parameters and inputs, an exact forward-over-reverse pass for the
parameter gradient of input-gradient norms (the double backprop behind the
discriminator's gradient penalty), a bias-corrected Adam, and a diagonal
Gaussian action head.

Shapes: weights are stored (fan_in, fan_out), activations are batch-first.
Single vectors are accepted everywhere and returned un-batched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT_VERSION = 1

LOG_STD_MIN = -4.0
LOG_STD_MAX = 1.0


class ShapeMismatch(ValueError):
    pass


class UnsupportedActivation(RuntimeError):
    """Gradient-penalty math needs twice-differentiable activations."""


class NonFiniteGradient(FloatingPointError):
    pass


@dataclass(frozen=True)
class NetworkSpec:
    layer_sizes: tuple[int, ...]
    hidden_activation: str = "tanh"     # "tanh" | "relu"
    output_activation: str = "linear"   # "linear" | "sigmoid"
    seed: int = 0

    def __post_init__(self):
        # production roles use >= 1 hidden layer; bare affine nets are
        # allowed for closed-form fixtures
        if len(self.layer_sizes) < 2:
            raise ValueError("need input and output sizes")
        if any(s <= 0 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        if self.hidden_activation not in ("tanh", "relu"):
            raise ValueError(f"unknown hidden activation {self.hidden_activation}")
        if self.output_activation not in ("linear", "sigmoid"):
            raise ValueError(f"unknown output activation {self.output_activation}")


@dataclass
class NetworkParameters:
    spec: NetworkSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    format_version: int = CHECKPOINT_FORMAT_VERSION

    def arrays(self) -> list[np.ndarray]:
        """Interleaved [W0, b0, W1, b1, ...] views for the optimizer."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def copy(self) -> "NetworkParameters":
        return NetworkParameters(
            spec=self.spec,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            format_version=self.format_version,
        )

    def zeros_like(self) -> "NetworkParameters":
        return NetworkParameters(
            spec=self.spec,
            weights=[np.zeros_like(w) for w in self.weights],
            biases=[np.zeros_like(b) for b in self.biases],
            format_version=self.format_version,
        )


def init_params(spec: NetworkSpec) -> NetworkParameters:
    """He init for rectifier hidden layers, Xavier-style for tanh."""
    rng = np.random.default_rng(spec.seed)
    gain = np.sqrt(2.0) if spec.hidden_activation == "relu" else 1.0
    weights, biases = [], []
    sizes = spec.layer_sizes
    last = len(sizes) - 2
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        g = 1.0 if i == last else gain
        weights.append(rng.normal(0.0, g / np.sqrt(fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return NetworkParameters(spec=spec, weights=weights, biases=biases)


def _act(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return z  # linear


def _act_prime(name, z, a):
    """First derivative, reusing the activation value ``a`` where cheap."""
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


def _act_second(name, z, a):
    if name == "tanh":
        return -2.0 * a * (1.0 - a * a)
    if name == "sigmoid":
        return a * (1.0 - a) * (1.0 - 2.0 * a)
    if name == "linear":
        return np.zeros_like(z)
    raise UnsupportedActivation(
        f"{name} has an a.e.-zero second derivative; use tanh for penalty nets"
    )


@dataclass
class ForwardCache:
    activations: list[np.ndarray]   # a_0 = input, ..., a_L = output
    preacts: list[np.ndarray]       # z_1, ..., z_L
    single: bool


def _layer_activation_names(spec: NetworkSpec) -> list[str]:
    n_layers = len(spec.layer_sizes) - 1
    return [spec.hidden_activation] * (n_layers - 1) + [spec.output_activation]


def forward(params: NetworkParameters, x) -> tuple[np.ndarray, ForwardCache]:
    """Affine + activation composition; returns output and the cache
    needed by ``backward``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    a = np.atleast_2d(x)
    if a.shape[1] != params.spec.layer_sizes[0]:
        raise ShapeMismatch(
            f"input dim {a.shape[1]} != {params.spec.layer_sizes[0]}"
        )
    acts, pres = [a], []
    for name, w, b in zip(_layer_activation_names(params.spec),
                          params.weights, params.biases):
        z = a @ w + b
        a = _act(name, z)
        pres.append(z)
        acts.append(a)
    out = acts[-1][0] if single else acts[-1]
    return out, ForwardCache(activations=acts, preacts=pres, single=single)


def backward(
    params: NetworkParameters, cache: ForwardCache, grad_output, wrt="output"
) -> tuple[NetworkParameters, np.ndarray]:
    """Exact reverse-mode gradients.

    ``grad_output`` is dL/d(output) per sample (``wrt="output"``) or
    dL/d(final pre-activation) (``wrt="logits"``, which skips the output
    nonlinearity - handy for numerically stable sigmoid losses). Gradients
    are summed over the batch exactly as supplied; scale ``grad_output``
    by 1/N for batch means. Returns (parameter grads, input grads).
    """
    names = _layer_activation_names(params.spec)
    g = np.atleast_2d(np.asarray(grad_output, dtype=float))
    grads = params.zeros_like()
    for i in reversed(range(len(params.weights))):
        z, a_out, a_in = cache.preacts[i], cache.activations[i + 1], cache.activations[i]
        if i == len(params.weights) - 1 and wrt == "logits":
            dz = g
        else:
            dz = g * _act_prime(names[i], z, a_out)
        grads.weights[i] += a_in.T @ dz
        grads.biases[i] += dz.sum(axis=0)
        g = dz @ params.weights[i].T
    input_grad = g[0] if cache.single else g
    return grads, input_grad


def input_gradient(params: NetworkParameters, x) -> np.ndarray:
    """d(output)/d(input) for scalar-output networks, per sample."""
    if params.spec.layer_sizes[-1] != 1:
        raise ShapeMismatch("input_gradient expects a scalar-output network")
    y, cache = forward(params, x)
    ones = np.ones((cache.activations[0].shape[0], 1))
    _, gx = backward(params, cache, ones)
    return gx


def grad_penalty_param_grads(
    params: NetworkParameters, x, grad_mask=None
) -> tuple[float, NetworkParameters]:
    """Mean squared input-gradient norm and its exact parameter gradient.

    penalty = mean_i || mask * d out_i / d x_i ||^2, with the optional mask
    freezing input slots (the condition one-hot stays out of the norm and
    out of the differentiation). The parameter gradient is computed by a
    forward-over-reverse (dual number) pass, exact for twice-differentiable
    activations; rectifier hidden layers are rejected.
    """
    spec = params.spec
    if spec.hidden_activation == "relu":
        raise UnsupportedActivation(
            "gradient penalty needs tanh hidden layers (relu curvature is zero a.e.)"
        )
    if spec.layer_sizes[-1] != 1:
        raise ShapeMismatch("gradient penalty expects a scalar-output network")
    names = _layer_activation_names(spec)

    x = np.asarray(x, dtype=float)
    xb = np.atleast_2d(x)
    n = xb.shape[0]

    _, cache = forward(params, xb)
    ones = np.ones((n, 1))
    _, g_full = backward(params, cache, ones)
    g_full = np.atleast_2d(g_full)
    if grad_mask is not None:
        mask = np.asarray(grad_mask, dtype=float)
        g = g_full * mask
    else:
        g = g_full
    penalty = float(np.mean(np.sum(g * g, axis=1)))

    # Tangent direction u_i = (2/n) * g_i (frozen); the dual forward's
    # output tangent is S = sum_i u_i . grad_x out_i, whose parameter
    # gradient equals d penalty / d theta exactly.
    u = (2.0 / n) * g
    a_dot = u
    z_dots, a_dots = [], [a_dot]
    for i, name in enumerate(names):
        z_dot = a_dot @ params.weights[i]
        z, a_out = cache.preacts[i], cache.activations[i + 1]
        a_dot = _act_prime(name, z, a_out) * z_dot
        z_dots.append(z_dot)
        a_dots.append(a_dot)

    grads = params.zeros_like()
    r_a = np.zeros_like(cache.activations[-1])
    r_adot = np.ones_like(a_dots[-1])
    for i in reversed(range(len(params.weights))):
        name = names[i]
        z, a_out = cache.preacts[i], cache.activations[i + 1]
        phi1 = _act_prime(name, z, a_out)
        phi2 = _act_second(name, z, a_out)
        r_zdot = r_adot * phi1
        r_z = r_adot * z_dots[i] * phi2 + r_a * phi1
        grads.weights[i] += cache.activations[i].T @ r_z + a_dots[i].T @ r_zdot
        grads.biases[i] += r_z.sum(axis=0)
        r_a = r_z @ params.weights[i].T
        r_adot = r_zdot @ params.weights[i].T
    return penalty, grads


def scale_grads(grads: NetworkParameters, c: float) -> NetworkParameters:
    for w in grads.weights:
        w *= c
    for b in grads.biases:
        b *= c
    return grads


def add_grads(into: NetworkParameters, other: NetworkParameters, c: float = 1.0):
    for wi, wo in zip(into.weights, other.weights):
        wi += c * wo
    for bi, bo in zip(into.biases, other.biases):
        bi += c * bo
    return into


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

@dataclass
class OptimizerState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_init(params_arrays: list[np.ndarray], lr: float, **kw) -> OptimizerState:
    state = OptimizerState(lr=lr, **kw)
    state.m = [np.zeros_like(p) for p in params_arrays]
    state.v = [np.zeros_like(p) for p in params_arrays]
    return state


def adam_step(
    params_arrays: list[np.ndarray],
    grads_arrays: list[np.ndarray],
    state: OptimizerState,
) -> list[np.ndarray]:
    """Bias-corrected Adam update, in place. Returns the updated arrays."""
    if len(params_arrays) != len(state.m):
        raise ShapeMismatch("optimizer state does not match parameter list")
    for g in grads_arrays:
        if not np.isfinite(g).all():
            raise NonFiniteGradient("non-finite gradient passed to adam_step")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params_arrays, grads_arrays, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params_arrays


# ---------------------------------------------------------------------------
# Diagonal Gaussian action head
# ---------------------------------------------------------------------------

def clamp_log_std(log_std: np.ndarray) -> np.ndarray:
    return np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)


def gaussian_sample(mean, log_std, rng: np.random.Generator):
    """Sample actions and their exact log density. No tanh squashing;
    the environment clamps actions instead."""
    mean = np.asarray(mean, dtype=float)
    std = np.exp(clamp_log_std(np.asarray(log_std, dtype=float)))
    action = mean + std * rng.standard_normal(mean.shape)
    return action, gaussian_log_prob(mean, log_std, action)


def gaussian_log_prob(mean, log_std, action):
    mean = np.asarray(mean, dtype=float)
    action = np.asarray(action, dtype=float)
    ls = clamp_log_std(np.asarray(log_std, dtype=float))
    std = np.exp(ls)
    d = (action - mean) / std
    return -0.5 * np.sum(d * d + 2.0 * ls + np.log(2.0 * np.pi), axis=-1)


# ---------------------------------------------------------------------------
# Checkpoint serialization: one plain-text JSON document per network, keys
# in canonical order (format_version, role, meta, spec, layers). Floats are
# written with shortest round-trip repr, so load -> save is byte-stable.
# ---------------------------------------------------------------------------

def save_network(params: NetworkParameters, path, role: str, meta: dict | None = None):
    doc = {
        "format_version": params.format_version,
        "role": role,
        "meta": meta or {},
        "spec": {
            "layer_sizes": list(params.spec.layer_sizes),
            "hidden_activation": params.spec.hidden_activation,
            "output_activation": params.spec.output_activation,
            "seed": params.spec.seed,
        },
        "layers": [],
    }
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        doc["layers"].append({
            "name": f"layer{i}/weight",
            "shape": list(w.shape),
            "values": [float(v) for v in w.reshape(-1)],
        })
        doc["layers"].append({
            "name": f"layer{i}/bias",
            "shape": list(b.shape),
            "values": [float(v) for v in b.reshape(-1)],
        })
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def load_network(path) -> tuple[NetworkParameters, str, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version in {path}")
    spec = NetworkSpec(
        layer_sizes=tuple(doc["spec"]["layer_sizes"]),
        hidden_activation=doc["spec"]["hidden_activation"],
        output_activation=doc["spec"]["output_activation"],
        seed=doc["spec"]["seed"],
    )
    weights, biases = [], []
    layers = {entry["name"]: entry for entry in doc["layers"]}
    for i in range(len(spec.layer_sizes) - 1):
        w = layers[f"layer{i}/weight"]
        b = layers[f"layer{i}/bias"]
        weights.append(np.array(w["values"], dtype=float).reshape(w["shape"]))
        biases.append(np.array(b["values"], dtype=float).reshape(b["shape"]))
    params = NetworkParameters(spec=spec, weights=weights, biases=biases)
    for w, expect in zip(params.weights, zip(spec.layer_sizes[:-1], spec.layer_sizes[1:])):
        if w.shape != expect:
            raise ShapeMismatch(f"layer shape {w.shape} != spec {expect} in {path}")
    return params, doc["role"], doc.get("meta", {})
