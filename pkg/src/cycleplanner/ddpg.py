"""DDPG: deterministic actor, Q critic, target copies and uniform replay."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .neural import Adam, Mlp, load_weights, save_weights, soft_update


@dataclass
class DdpgConfig:
    gamma: float = 0.9
    noise_std: float = 0.1
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    batch_size: int = 128
    tau: float = 1e-4
    buffer_size: int = 100_000
    actor_hidden: tuple[int, ...] = (200, 200, 100)
    critic_hidden: tuple[int, ...] = (300, 200, 200)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["actor_hidden"] = list(self.actor_hidden)
        d["critic_hidden"] = list(self.critic_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DdpgConfig":
        d = dict(d)
        for k in ("actor_hidden", "critic_hidden"):
            if k in d:
                d[k] = tuple(int(x) for x in d[k])
        return cls(**d)


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s2: np.ndarray


class InsufficientData(RuntimeError):
    pass


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling (with replacement)."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, state_dim))
        self.size = 0
        self._next = 0
        self.total_added = 0

    def __len__(self) -> int:
        return self.size

    def add(self, s, a, r, s2) -> None:
        i = self._next
        s = np.asarray(s, dtype=float)
        s2 = np.asarray(s2, dtype=float)
        a = np.asarray(a, dtype=float).reshape(-1)
        if s.shape != self.s.shape[1:] or s2.shape != self.s.shape[1:] or a.shape != self.a.shape[1:]:
            raise ValueError("transition dimensions do not match the buffer")
        self.s[i], self.a[i], self.r[i], self.s2[i] = s, a, r, s2
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.total_added += 1

    def sample(self, batch_size: int, rng: np.random.Generator):
        if self.size < batch_size:
            raise InsufficientData(f"buffer holds {self.size} < batch size {batch_size}")
        idx = rng.integers(0, self.size, size=batch_size)
        return self.s[idx], self.a[idx], self.r[idx], self.s2[idx]


class DdpgAgent:
    def __init__(self, state_dim: int, action_dim: int, config: DdpgConfig | None = None,
                 seed: int | np.random.SeedSequence = 0):
        self.config = cfg = config or DdpgConfig()
        self.state_dim = state_dim
        self.action_dim = action_dim
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        init_ss, noise_ss, sample_ss = ss.spawn(3)
        init_rng = np.random.default_rng(init_ss)
        self.noise_rng = np.random.default_rng(noise_ss)
        self.sample_rng = np.random.default_rng(sample_ss)
        self.actor = Mlp([state_dim, *cfg.actor_hidden, action_dim], "tanh", init_rng)
        self.critic = Mlp([state_dim + action_dim, *cfg.critic_hidden, 1], "identity", init_rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = Adam(self.actor.params(), cfg.lr_actor)
        self.critic_opt = Adam(self.critic.params(), cfg.lr_critic)
        self.buffer = ReplayBuffer(cfg.buffer_size, state_dim, action_dim)
        self.updates = 0

    def act(self, state, explore: bool = False) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        if state.shape != (self.state_dim,):
            raise ValueError(f"state has shape {state.shape}, expected ({self.state_dim},)")
        a = self.actor(state)
        if explore:
            a = a + self.noise_rng.normal(0.0, self.config.noise_std, size=a.shape)
        return np.clip(a, -1.0, 1.0)

    def q(self, s, a) -> np.ndarray:
        return self.critic(np.concatenate([np.atleast_2d(s), np.atleast_2d(a)], axis=1))[:, 0]

    def critic_target_value(self, r, s2) -> np.ndarray:
        """Bootstrapped target r + gamma * Q'(s', pi'(s')), from the target networks."""
        s2 = np.atleast_2d(np.asarray(s2, dtype=float))
        a2 = self.actor_target(s2)
        q2 = self.critic_target(np.concatenate([s2, a2], axis=1))[:, 0]
        return np.asarray(r, dtype=float) + self.config.gamma * q2

    def store(self, s, a, r, s2) -> None:
        self.buffer.add(s, a, r, s2)

    def update(self, batch=None) -> tuple[float, float]:
        """One critic step, one actor step, then soft target updates.

        Returns the critic's mean squared TD error (before its step) and the
        batch-mean Q(s, pi(s)) (before the actor step).
        """
        cfg = self.config
        if batch is None:
            batch = self.buffer.sample(cfg.batch_size, self.sample_rng)
        s, a, r, s2 = batch
        n = s.shape[0]

        y = self.critic_target_value(r, s2)
        q, cache = self.critic.forward_cache(np.concatenate([s, a], axis=1))
        err = q[:, 0] - y
        critic_loss = float(np.mean(err ** 2))
        grads, _ = self.critic.backward(cache, (2.0 / n) * err[:, None])
        self.critic_opt.step(grads)

        pi, a_cache = self.actor.forward_cache(s)
        qpi, q_cache = self.critic.forward_cache(np.concatenate([s, pi], axis=1))
        actor_obj = float(np.mean(qpi))
        _, dq_dx = self.critic.backward(q_cache, np.full((n, 1), 1.0 / n))
        dq_da = dq_dx[:, self.state_dim:]
        a_grads, _ = self.actor.backward(a_cache, -dq_da)
        self.actor_opt.step(a_grads)

        soft_update(self.critic_target, self.critic, cfg.tau)
        soft_update(self.actor_target, self.actor, cfg.tau)
        self.updates += 1
        return critic_loss, actor_obj

    def maybe_update(self):
        if len(self.buffer) < self.config.batch_size:
            return None
        return self.update()

    # -- checkpoints --------------------------------------------------------

    NETS = ("actor", "critic", "actor_target", "critic_target")

    def save(self, directory, prefix: str) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name in self.NETS:
            save_weights(getattr(self, name), directory / f"{prefix}_{name}.json")

    def load(self, directory, prefix: str) -> None:
        directory = Path(directory)
        for name in self.NETS:
            net = load_weights(directory / f"{prefix}_{name}.json")
            if net.widths != getattr(self, name).widths:
                raise ValueError(f"{prefix}_{name}: checkpoint widths {net.widths} "
                                 f"do not match agent {getattr(self, name).widths}")
            setattr(self, name, net)
        self.actor_opt = Adam(self.actor.params(), self.config.lr_actor)
        self.critic_opt = Adam(self.critic.params(), self.config.lr_critic)
