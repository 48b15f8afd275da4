"""Independent reference implementations shared by unit and acceptance tests."""

import itertools

import numpy as np

from cycleplanner.ddpg import DdpgAgent, DdpgConfig
from cycleplanner.neural import Mlp

BANDIT_CONFIG = DdpgConfig(gamma=0.0, lr_actor=1e-3, lr_critic=1e-3, tau=0.01, batch_size=64,
                           actor_hidden=(32, 32), critic_hidden=(64, 64))


def brute_force_apportion(x, total):
    """Among all floor/ceil vectors summing to ``total``, the one closest in squared error;
    ties prefer rounding up earlier phases."""
    best = None
    for ups in itertools.product((0, 1), repeat=len(x)):
        r = [int(np.floor(v + 1e-9)) + u for v, u in zip(x, ups)]
        if sum(r) != total:
            continue
        cost = round(sum((ri - v) ** 2 for ri, v in zip(r, x)), 9)
        key = (cost, [-ri for ri in r])
        if best is None or key < best[0]:
            best = (key, r)
    return tuple(best[1])


def directional_check(net, rng, h=1e-5):
    """Relative error between the analytic and central-difference derivative of
    L = c . net(x) along a random unit direction in parameter space and one in input space."""
    x = rng.normal(size=(3, net.widths[0]))
    c = rng.normal(size=(3, net.widths[-1]))

    def loss():
        return float(np.sum(c * net(x)))

    grads, gx = net.gradients(x, c)
    params = net.params()
    dirs = [rng.normal(size=p.shape) for p in params]
    norm = np.sqrt(sum(float(np.sum(d * d)) for d in dirs))
    dirs = [d / norm for d in dirs]
    analytic = sum(float(np.sum(g * d)) for g, d in zip(grads, dirs))
    for p, d in zip(params, dirs):
        p += h * d
    up = loss()
    for p, d in zip(params, dirs):
        p -= 2 * h * d
    down = loss()
    for p, d in zip(params, dirs):
        p += h * d
    numeric = (up - down) / (2 * h)
    err_p = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-12)

    dx = rng.normal(size=x.shape)
    dx /= np.linalg.norm(dx)
    analytic_x = float(np.sum(gx * dx))
    numeric_x = (float(np.sum(c * net(x + h * dx))) - float(np.sum(c * net(x - h * dx)))) / (2 * h)
    err_x = abs(analytic_x - numeric_x) / max(abs(analytic_x), abs(numeric_x), 1e-12)
    return max(err_p, err_x)


def quadratic_bandit(seed, steps=5000, config=BANDIT_CONFIG):
    """Single-step task, s ~ U[-1, 1], reward -(a - s/2)^2.  Returns mean |pi(s) - s/2| on a grid."""
    agent = DdpgAgent(1, 1, config, seed)
    rng = np.random.default_rng(1000 + seed)
    for _ in range(steps):
        s = rng.uniform(-1, 1, size=1)
        a = agent.act(s, explore=True)
        agent.store(s, a, -float((a[0] - 0.5 * s[0]) ** 2), rng.uniform(-1, 1, size=1))
        agent.maybe_update()
    xs = np.linspace(-1, 1, 201)[:, None]
    return float(np.mean(np.abs(agent.actor(xs)[:, 0] - 0.5 * xs[:, 0]))), agent.updates


def random_network(widths, output, rng):
    """Initialised weights plus nonzero biases, so no preactivation sits exactly on a ReLU kink."""
    net = Mlp(widths, output, rng)
    for b in net.biases:
        b[:] = rng.normal(0.0, 0.1, size=b.shape)
    return net
