"""Dense ReLU networks with hand-derived gradients, Adam, and JSON checkpoints.

Everything is float64.  Inputs may be a single vector or a batch of row
vectors; outputs keep the same rank.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

OUTPUTS = ("identity", "tanh")


class CheckpointError(ValueError):
    pass


class Mlp:
    def __init__(self, widths, output: str = "identity", rng: np.random.Generator | int | None = None):
        widths = [int(w) for w in widths]
        if len(widths) < 2 or min(widths) < 1:
            raise ValueError(f"bad layer widths {widths}")
        if output not in OUTPUTS:
            raise ValueError(f"output activation must be one of {OUTPUTS}")
        self.widths = widths
        self.output = output
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        n_layers = len(widths) - 1
        for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
            if i < n_layers - 1:
                bound = np.sqrt(6.0 / fan_in)  # He-uniform
            else:
                bound = np.sqrt(6.0 / (fan_in + fan_out))  # Xavier-uniform
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def params(self) -> list[np.ndarray]:
        """Parameters as [W0, b0, W1, b1, ...]; the arrays are live views."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "Mlp":
        net = Mlp.__new__(Mlp)
        net.widths = list(self.widths)
        net.output = self.output
        net.weights = [w.copy() for w in self.weights]
        net.biases = [b.copy() for b in self.biases]
        return net

    def _as_batch(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.widths[0]:
            raise ValueError(f"input shape {x.shape} does not match first layer width {self.widths[0]}")
        return x, single

    def forward(self, x) -> np.ndarray:
        y, _ = self.forward_cache(x)
        return y

    __call__ = forward

    def forward_cache(self, x):
        h, single = self._as_batch(x)
        acts = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            if i < last:
                h = np.maximum(z, 0.0)
            elif self.output == "tanh":
                h = np.tanh(z)
            else:
                h = z
            acts.append(h)
        y = acts[-1][0] if single else acts[-1]
        return y, (acts, single)

    def backward(self, cache, grad_out):
        """Gradients of ``sum(grad_out * y)`` with respect to parameters and input.

        Returns ``(param_grads, grad_input)`` with ``param_grads`` ordered like
        `params`.
        """
        acts, single = cache
        g = np.asarray(grad_out, dtype=np.float64)
        if single:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ValueError(f"upstream gradient shape {g.shape} != output shape {acts[-1].shape}")
        if self.output == "tanh":
            g = g * (1.0 - acts[-1] ** 2)
        grads: list[np.ndarray] = []
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = acts[i]
            grads.append(g.sum(axis=0))
            grads.append(h_in.T @ g)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * (acts[i] > 0)
        grads.reverse()  # now [W0, b0, W1, b1, ...]
        return grads, (g[0] if single else g)

    def gradients(self, x, grad_out):
        """Forward then backward in one call."""
        _, cache = self.forward_cache(x)
        return self.backward(cache, grad_out)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, **kw) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], **kw)


def adam_step(params, grads, state: AdamState, lr: float) -> None:
    """In-place bias-corrected Adam update of ``params``."""
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


@dataclass
class Adam:
    params: list[np.ndarray]
    lr: float
    state: AdamState = field(init=False)

    def __post_init__(self):
        self.state = AdamState.for_params(self.params)

    def step(self, grads) -> None:
        adam_step(self.params, grads, self.state, self.lr)


def soft_update(target: Mlp, online: Mlp, tau: float) -> Mlp:
    if target.widths != online.widths:
        raise ValueError(f"shape mismatch: {target.widths} vs {online.widths}")
    for pt, po in zip(target.params(), online.params()):
        pt *= 1.0 - tau
        pt += tau * po
    return target


def to_dict(net: Mlp) -> dict:
    return {
        "widths": net.widths,
        "output": net.output,
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def from_dict(data: dict) -> Mlp:
    try:
        widths = [int(w) for w in data["widths"]]
        output = data.get("output", "identity")
        weights = [np.array(w, dtype=np.float64) for w in data["weights"]]
        biases = [np.array(b, dtype=np.float64) for b in data["biases"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint: {exc!r}") from exc
    n = len(widths) - 1
    if n < 1 or len(weights) != n or len(biases) != n:
        raise CheckpointError(f"checkpoint declares {n} layers but holds {len(weights)} weight arrays")
    for i in range(n):
        if weights[i].shape != (widths[i], widths[i + 1]) or biases[i].shape != (widths[i + 1],):
            raise CheckpointError(
                f"layer {i}: arrays {weights[i].shape}/{biases[i].shape} do not match declared widths "
                f"{widths[i]}->{widths[i + 1]}"
            )
    net = Mlp.__new__(Mlp)
    net.widths, net.output, net.weights, net.biases = widths, output, weights, biases
    if output not in OUTPUTS:
        raise CheckpointError(f"unknown output activation {output!r}")
    return net


def save_weights(net: Mlp, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(to_dict(net)))
    tmp.replace(path)


def load_weights(path) -> Mlp:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON ({exc})") from exc
    return from_dict(data)
