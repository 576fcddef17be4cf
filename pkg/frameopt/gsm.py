"""Gumbel-softmax machinery for categorical design variables.

A categorical variable with ``N`` choices is parametrized by a logit
vector ``theta``.  Drawing a choice uses the Gumbel-max trick; the
gradient of an objective with respect to ``theta`` is estimated with a
straight-through Gumbel-softmax sample, whose temperature is annealed
during optimization.

Choice indices are zero-based throughout.
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.special import logit as _logit
from scipy.special import softmax as _softmax

from .interfaces import DomainError

#: Smallest uniform variate fed into the double logarithm.
TINY = np.finfo(float).tiny

#: Largest double strictly below one.
ONE_MINUS_EPS = np.nextafter(1.0, 0.0)


HardSample = namedtuple('HardSample', ['index', 'onehot'])


def make_rng(seed=None):
    """Returns the random generator used by a single optimizer run.

    The generator is seeded through a :class:`numpy.random.SeedSequence`
    so that independent child generators may be obtained with
    :meth:`numpy.random.Generator.spawn`.
    """
    return np.random.default_rng(np.random.SeedSequence(seed))


def logit(p):
    """Inverse of the logistic function, elementwise.

    :raises DomainError: if any entry is outside the open unit interval.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0) or np.any(np.isnan(p)):
        raise DomainError("logit is only defined on (0, 1), got {}".format(p))
    return _logit(p)


def softmax(theta):
    """Numerically stable softmax of a logit vector."""
    return _softmax(np.asarray(theta, dtype=float))


def _onehot(index, size):
    onehot = np.zeros(size)
    onehot[index] = 1.0
    return onehot


def gumbel_from_uniform(u):
    """Maps uniform variates to standard Gumbel variates.

    Variates are clamped into ``(0, 1)`` first, so the result is always
    finite.
    """
    u = np.clip(np.asarray(u, dtype=float), TINY, ONE_MINUS_EPS)
    return -np.log(-np.log(u))


def sample_gumbel(rng, size):
    """Draws *size* independent standard Gumbel variates."""
    return gumbel_from_uniform(rng.random(size))


def gm_draws(theta, rng, size):
    """Draws *size* choices with the Gumbel-max trick.

    :return: An integer array of choice indices.
    """
    theta = np.asarray(theta, dtype=float)
    noise = sample_gumbel(rng, (size, theta.size))
    return np.argmax(theta + noise, axis=1)


def gm_sample(theta, rng):
    """Draws a single hard choice with the Gumbel-max trick."""
    theta = np.asarray(theta, dtype=float)
    index = int(gm_draws(theta, rng, 1)[0])
    return HardSample(index, _onehot(index, theta.size))


def cdf_draws(theta, rng, size):
    """Draws *size* choices by inverting the cumulative distribution of
    ``softmax(theta)``: the choice is the smallest ``i`` with
    ``r <= cumsum(p)[i]``.
    """
    theta = np.asarray(theta, dtype=float)
    cumulative = np.cumsum(softmax(theta))
    r = rng.random(size)
    indices = np.searchsorted(cumulative, r, side='left')
    return np.minimum(indices, theta.size - 1)


def cdf_sample(theta, rng):
    """Draws a single hard choice by inverse CDF sampling."""
    theta = np.asarray(theta, dtype=float)
    index = int(cdf_draws(theta, rng, 1)[0])
    return HardSample(index, _onehot(index, theta.size))


def gsm_soft_sample(theta, noise, tau):
    """The Gumbel-softmax relaxation ``softmax((theta + noise) / tau)``.

    :raises DomainError: if *tau* is not positive.
    """
    if not tau > 0:
        raise DomainError("temperature must be positive, got {}".format(tau))
    theta = np.asarray(theta, dtype=float)
    return softmax((theta + np.asarray(noise, dtype=float)) / tau)


def straight_through(soft):
    """Forward value of the straight-through estimator: the one-hot
    vector of the largest entry of *soft*, lowest index on ties.
    """
    soft = np.asarray(soft, dtype=float)
    index = int(np.argmax(soft))
    return HardSample(index, _onehot(index, soft.size))


def soft_sample_jacobian(soft, tau, temperature_scaling=True):
    """Jacobian of a soft sample with respect to the logits.

    With *temperature_scaling* this is the exact derivative
    ``(diag(s) - s s^T) / tau``.  Without it, the ``1 / tau`` factor is
    dropped, which keeps gradient magnitudes bounded while the
    temperature is annealed.
    """
    soft = np.asarray(soft, dtype=float)
    jac = np.diag(soft) - np.outer(soft, soft)
    if temperature_scaling:
        if not tau > 0:
            raise DomainError(
                "temperature must be positive, got {}".format(tau))
        jac = jac / tau
    return jac


class AnnealSchedule:
    """Exponential temperature decay with a floor:
    ``tau(k) = max(minimum, initial * decay ** k)``.
    """

    def __init__(self, initial=100.0, decay=0.9, minimum=0.01):
        if not initial > 0 or not minimum > 0:
            raise DomainError(
                "temperatures must be positive, got initial={} and "
                "minimum={}".format(initial, minimum))
        if not 0 < decay <= 1:
            raise DomainError(
                "decay must be in (0, 1], got {}".format(decay))
        self.initial = initial
        self.decay = decay
        self.minimum = minimum

    def temperature(self, iteration):
        return max(self.minimum, self.initial * self.decay ** iteration)

    def __repr__(self):
        return "AnnealSchedule(initial={}, decay={}, minimum={})".format(
            self.initial, self.decay, self.minimum)


@dataclass
class SampleState:
    """Everything drawn for one categorical variable in one iteration."""
    noises: np.ndarray
    soft: np.ndarray
    hard: HardSample
    jacobian: np.ndarray
    tau: float


def draw_sample_state(theta, rng, tau, samples=1, temperature_scaling=True):
    """Draws *samples* Gumbel noise vectors for one categorical variable.

    The hard choice is the majority vote of the per-sample argmaxes
    (lowest index on ties).  The soft sample and its Jacobian are the
    averages over the samples, which keeps them consistent: the
    Jacobian is the derivative of the averaged soft sample.
    """
    if samples < 1:
        raise DomainError("need at least one sample, got {}".format(samples))
    theta = np.asarray(theta, dtype=float)
    noises = sample_gumbel(rng, (samples, theta.size))
    softs = [gsm_soft_sample(theta, noise, tau) for noise in noises]
    votes = np.bincount(
        [int(np.argmax(theta + noise)) for noise in noises],
        minlength=theta.size,
        )
    index = int(np.argmax(votes))
    jacobian = np.mean(
        [soft_sample_jacobian(soft, tau, temperature_scaling)
         for soft in softs], axis=0)
    return SampleState(
        noises=noises,
        soft=np.mean(softs, axis=0),
        hard=HardSample(index, _onehot(index, theta.size)),
        jacobian=jacobian,
        tau=tau,
        )
