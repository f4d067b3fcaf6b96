"""Minimal dense-network engine with reverse-mode gradients.

Covers exactly what the surrogate models need: dense layers with GELU /
sigmoid / linear activations, batch normalization, Adam, and the MSE / RMSE /
binary cross-entropy losses, all in float64 numpy. Tensors are plain
(batch, features) ndarrays.

A network instance is single-writer while training (forward caches feed the
following backward); inference on a snapshot is freely concurrent. Forward
passes are deterministic: identical parameters and inputs give bit-identical
outputs.
"""

from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import TrainingError, ValidationError

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_BCE_CLAMP = 1e-7

GELU = "gelu"
SIGMOID = "sigmoid"
LINEAR = None


def gelu(x):
    """Exact-erf Gaussian error linear unit: x * Phi(x)."""
    x = np.asarray(x, dtype=float)
    return x * 0.5 * (1.0 + specfun.erf(x / _SQRT2))


def _stable_sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class DenseLayer:
    """Affine map x @ W + b followed by an optional activation."""

    def __init__(self, n_in, n_out, activation=LINEAR, rng=None):
        if activation not in (GELU, SIGMOID, LINEAR):
            raise ValidationError(f"unknown activation {activation!r}")
        if rng is None:
            rng = np.random.default_rng(0)
        limit = np.sqrt(6.0 / (n_in + n_out))
        self.weight = rng.uniform(-limit, limit, size=(n_in, n_out))
        self.bias = np.zeros(n_out)
        self.activation = activation
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = np.zeros_like(self.bias)
        self._cache = None

    def param_items(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def grad_items(self):
        return [("weight", self.grad_weight), ("bias", self.grad_bias)]

    def forward(self, x, train=False, update_stats=False):
        if x.ndim != 2 or x.shape[1] != self.weight.shape[0]:
            raise ValidationError(
                f"dense layer expected (*, {self.weight.shape[0]}) input, "
                f"got {x.shape}")
        z = x @ self.weight + self.bias
        if self.activation == GELU:
            phi_cdf = 0.5 * (1.0 + specfun.erf(z / _SQRT2))
            y = z * phi_cdf
            self._cache = (x, z, phi_cdf)
        elif self.activation == SIGMOID:
            y = _stable_sigmoid(z)
            self._cache = (x, z, y)
        else:
            y = z
            self._cache = (x, z, None)
        return y

    def backward(self, grad_out):
        if self._cache is None:
            raise ValidationError("backward called before forward")
        x, z, extra = self._cache
        if self.activation == GELU:
            pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
            grad_z = grad_out * (extra + z * pdf)
        elif self.activation == SIGMOID:
            grad_z = grad_out * extra * (1.0 - extra)
        else:
            grad_z = grad_out
        self.grad_weight = x.T @ grad_z
        self.grad_bias = grad_z.sum(axis=0)
        return grad_z @ self.weight.T


class BatchNormLayer:
    """Per-feature batch normalization with train/infer modes.

    Train mode normalizes with batch statistics (biased variance) and, when
    update_stats is set, folds them into the running statistics with the
    given momentum. Infer mode uses the running statistics.
    """

    def __init__(self, n_features, momentum=0.99, epsilon=1e-5):
        if epsilon <= 0:
            raise ValidationError("epsilon must be > 0")
        self.gamma = np.ones(n_features)
        self.beta = np.zeros(n_features)
        self.running_mean = np.zeros(n_features)
        self.running_var = np.ones(n_features)
        self.momentum = momentum
        self.epsilon = epsilon
        self.grad_gamma = np.zeros_like(self.gamma)
        self.grad_beta = np.zeros_like(self.beta)
        self._cache = None

    def param_items(self):
        return [("gamma", self.gamma), ("beta", self.beta)]

    def grad_items(self):
        return [("gamma", self.grad_gamma), ("beta", self.grad_beta)]

    def state_items(self):
        return [("running_mean", self.running_mean),
                ("running_var", self.running_var)]

    def forward(self, x, train=False, update_stats=False):
        if train:
            if x.shape[0] < 2:
                raise ValidationError(
                    "batch normalization needs batch >= 2 in train mode")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            if update_stats:
                self.running_mean = (self.momentum * self.running_mean
                                     + (1.0 - self.momentum) * mean)
                self.running_var = (self.momentum * self.running_var
                                    + (1.0 - self.momentum) * var)
            inv_std = 1.0 / np.sqrt(var + self.epsilon)
            x_hat = (x - mean) * inv_std
            self._cache = (x_hat, inv_std)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.epsilon)
            x_hat = (x - self.running_mean) * inv_std
            self._cache = None
        return self.gamma * x_hat + self.beta

    def backward(self, grad_out):
        if self._cache is None:
            raise ValidationError("batch-norm backward requires a train-mode "
                                  "forward pass")
        x_hat, inv_std = self._cache
        n = x_hat.shape[0]
        self.grad_gamma = (grad_out * x_hat).sum(axis=0)
        self.grad_beta = grad_out.sum(axis=0)
        return (self.gamma * inv_std / n) * (
            n * grad_out - self.grad_beta - x_hat * self.grad_gamma)


class Network:
    """A plain stack of layers with named parameters."""

    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x, train=False, update_stats=False):
        x = np.asarray(x, dtype=float)
        for layer in self.layers:
            x = layer.forward(x, train=train, update_stats=update_stats)
        return x

    def backward(self, grad_out):
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def parameters(self):
        """Live {name: array} mapping; mutating the arrays mutates the net."""
        out = {}
        for i, layer in enumerate(self.layers):
            for name, arr in layer.param_items():
                out[f"layer{i}.{name}"] = arr
        return out

    def gradients(self):
        out = {}
        for i, layer in enumerate(self.layers):
            for name, arr in layer.grad_items():
                out[f"layer{i}.{name}"] = arr
        return out

    def state_dict(self):
        """Parameters plus batch-norm running statistics, copied."""
        out = {name: arr.copy() for name, arr in self.parameters().items()}
        for i, layer in enumerate(self.layers):
            if isinstance(layer, BatchNormLayer):
                for name, arr in layer.state_items():
                    out[f"layer{i}.{name}"] = arr.copy()
        return out

    def load_state_dict(self, state):
        params = self.parameters()
        for name, arr in params.items():
            np.copyto(arr, state[name])
        for i, layer in enumerate(self.layers):
            if isinstance(layer, BatchNormLayer):
                layer.running_mean = state[f"layer{i}.running_mean"].copy()
                layer.running_var = state[f"layer{i}.running_var"].copy()


# --- losses -----------------------------------------------------------------

def _check_shapes(pred, target):
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValidationError(
            f"prediction shape {pred.shape} != target shape {target.shape}")
    return pred, target


def mse_loss(pred, target):
    pred, target = _check_shapes(pred, target)
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_grad(pred, target):
    pred, target = _check_shapes(pred, target)
    return 2.0 * (pred - target) / pred.size


def rmse_loss(pred, target):
    return float(np.sqrt(mse_loss(pred, target)))


def rmse_grad(pred, target):
    """Gradient of sqrt(MSE); defined as zero at exactly zero loss."""
    pred, target = _check_shapes(pred, target)
    root = np.sqrt(np.mean((pred - target) ** 2))
    if root == 0.0:
        return np.zeros_like(pred)
    return (pred - target) / (pred.size * root)


def bce_loss(prob, label):
    """Mean binary cross-entropy with probabilities clamped to
    [1e-7, 1 - 1e-7]."""
    prob, label = _check_shapes(prob, label)
    p = np.clip(prob, _BCE_CLAMP, 1.0 - _BCE_CLAMP)
    return float(-np.mean(label * np.log(p) + (1.0 - label) * np.log1p(-p)))


def bce_grad(prob, label):
    prob, label = _check_shapes(prob, label)
    p = np.clip(prob, _BCE_CLAMP, 1.0 - _BCE_CLAMP)
    grad = (p - label) / (p * (1.0 - p)) / prob.size
    # the clamp is flat outside its window, matching finite differences
    grad[(prob < _BCE_CLAMP) | (prob > 1.0 - _BCE_CLAMP)] = 0.0
    return grad


LOSSES = {"mse": (mse_loss, mse_grad),
          "rmse": (rmse_loss, rmse_grad),
          "bce": (bce_loss, bce_grad)}


# --- optimizer ---------------------------------------------------------------

class Adam:
    """Standard bias-corrected Adam over a named parameter dict."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(arr) for name, arr in params.items()}
        self.v = {name: np.zeros_like(arr) for name, arr in params.items()}

    def step(self, params, grads):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient at parameter {name}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)

    def state_dict(self):
        out = {"t": self.t}
        out.update({f"m.{k}": v.copy() for k, v in self.m.items()})
        out.update({f"v.{k}": v.copy() for k, v in self.v.items()})
        return out

    def load_state_dict(self, state):
        self.t = int(state["t"])
        for k in self.m:
            np.copyto(self.m[k], state[f"m.{k}"])
            np.copyto(self.v[k], state[f"v.{k}"])


# --- gradient verification ---------------------------------------------------

@dataclass
class GradCheckResult:
    max_rel_error: float
    worst_param: str
    worst_index: int

    def __repr__(self):
        return (f"GradCheckResult(max_rel_error={self.max_rel_error:.3e}, "
                f"worst_param={self.worst_param!r}, "
                f"worst_index={self.worst_index})")


def grad_check(loss_fn, params, analytic, step=1e-5):
    """Compare analytic gradients against central finite differences.

    loss_fn is a zero-argument callable evaluating the scalar loss from the
    current (live) parameter arrays; params maps names to those arrays and
    analytic maps the same names to the backprop gradients being verified.
    Relative error uses max(|fd|, |analytic|, 1e-6) in the denominator so
    finite-difference round-off on near-zero gradients cannot dominate.
    """
    worst = GradCheckResult(0.0, "", -1)
    for name, arr in params.items():
        flat = arr.reshape(-1)
        g_ref = np.asarray(analytic[name]).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = loss_fn()
            flat[i] = orig - step
            f_minus = loss_fn()
            flat[i] = orig
            g_fd = (f_plus - f_minus) / (2.0 * step)
            denom = max(abs(g_fd), abs(g_ref[i]), 1e-6)
            rel = abs(g_fd - g_ref[i]) / denom
            if rel > worst.max_rel_error:
                worst = GradCheckResult(rel, name, i)
    return worst


def grad_check_network(net: Network, x, target, loss="mse", step=1e-5):
    """Gradient check of every parameter of a network under a named loss.

    Runs in train mode with frozen running statistics so repeated forward
    passes are pure.
    """
    loss_fn_pair = LOSSES[loss]
    x = np.asarray(x, dtype=float)
    target = np.asarray(target, dtype=float)

    def loss_value():
        return loss_fn_pair[0](net.forward(x, train=True), target)

    pred = net.forward(x, train=True)
    net.backward(loss_fn_pair[1](pred, target))
    analytic = {k: v.copy() for k, v in net.gradients().items()}
    return grad_check(loss_value, net.parameters(), analytic, step=step)
