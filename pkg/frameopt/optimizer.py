"""Gradient-based optimizers for mixed categorical and continuous
designs.

:class:`GSMO` updates logits and continuous variables jointly from one
finite element solve and its adjoints per iteration.  :class:`BiGSMO`
alternates: an inner loop updates only the logits, then one step
updates only the continuous variables.
"""

from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field

import numpy as np
import pandas as pd

from .design import extract_design
from .gsm import AnnealSchedule
from .gsm import draw_sample_state
from .gsm import make_rng
from .interfaces import ConfigurationError
from .interfaces import FrameoptError
from .interfaces import NumericalError
from .interfaces import Optimizer
from .util import logger
from .util import timer

#: Largest normalized constraint value that still counts as feasible.
FEASIBILITY_TOLERANCE = 1e-9

#: Decay rates of the first and second logit gradient moments, and the
#: regularizer of their ratio.
MOMENT_DECAYS = (0.9, 0.999)
MOMENT_EPSILON = 1e-8

LOGIT_UPDATES = ('adam', 'sgd')


def penalized_objective(objective, constraints, penalty_factor):
    """``J + c * sum(max(0, g)^2)``."""
    violations = np.maximum(0.0, np.asarray(constraints, dtype=float))
    return float(objective + penalty_factor * np.sum(violations ** 2))


def penalty_weights(constraints, penalty_factor):
    """Weights that turn the gradients of ``[J, g_1, ...]`` into the
    gradient of :func:`penalized_objective`.
    """
    violations = np.maximum(0.0, np.asarray(constraints, dtype=float))
    return np.concatenate([[1.0], 2.0 * penalty_factor * violations])


def selection_key(max_violation, penalized):
    """Orders designs: feasible before infeasible, then by penalized
    objective.
    """
    return (bool(max_violation > FEASIBILITY_TOLERANCE), penalized)


class LogitMoments:
    """Bias-corrected running moments of the logit gradients, one pair
    of arrays per categorical variable.
    """

    def __init__(self, logits):
        self.first = [np.zeros(len(theta)) for theta in logits]
        self.second = [np.zeros(len(theta)) for theta in logits]
        self.count = 0

    def directions(self, grad_logits):
        """Advances the moments by one gradient and returns the update
        directions ``m / (sqrt(v) + eps)``.
        """
        beta1, beta2 = MOMENT_DECAYS
        self.count += 1
        directions = []
        for i, grad in enumerate(grad_logits):
            self.first[i] = beta1 * self.first[i] + (1 - beta1) * grad
            self.second[i] = beta2 * self.second[i] + (1 - beta2) * grad ** 2
            first = self.first[i] / (1 - beta1 ** self.count)
            second = self.second[i] / (1 - beta2 ** self.count)
            directions.append(first / (np.sqrt(second) + MOMENT_EPSILON))
        return directions


def update_step(space, x, logits, grad_x, grad_logits, step_size,
                logit_step=None, moments=None):
    """One projected gradient step.

    Continuous variables move in bound-normalized coordinates and are
    clipped to their bounds.  Logits move by *logit_step* (default
    *step_size*) along the plain gradient, or along the directions of
    *moments* when given.

    :raises NumericalError: on non-finite gradients.
    """
    grad_x = np.asarray(grad_x, dtype=float)
    if not (np.all(np.isfinite(grad_x)) and
            all(np.all(np.isfinite(g)) for g in grad_logits)):
        raise NumericalError("Non-finite gradient in update step")

    lower, upper = space.lower, space.upper
    span = upper - lower
    movable = span > 0
    z = np.where(movable, (np.asarray(x, dtype=float) - lower) /
                 np.where(movable, span, 1.0), 0.0)
    z = np.clip(z - step_size * grad_x * span, 0.0, 1.0)
    x_new = np.where(movable, lower + z * span, lower)

    if logit_step is None:
        logit_step = step_size
    if moments is not None:
        grad_logits = moments.directions(grad_logits)
    logits_new = [np.asarray(theta, dtype=float) - logit_step * g
                  for theta, g in zip(logits, grad_logits)]
    return x_new, logits_new


@dataclass
class Iterate:
    """Current continuous values and logits of a run, and the best
    sampled design so far as ``(key, x, choices)``.
    """
    x: np.ndarray
    logits: list
    incumbent: tuple = None

    def consider(self, record, x, choices):
        key = selection_key(record.max_violation, record.penalized)
        if self.incumbent is None or key < self.incumbent[0]:
            self.incumbent = (key, np.array(x, dtype=float), list(choices))


@dataclass
class IterationRecord:
    iteration: int
    phase: str
    temperature: float
    objective: float
    penalized: float
    max_violation: float
    choices: tuple = ()


@dataclass
class RunRecord:
    """Outcome of one optimizer run."""
    method: str
    seed: int = None
    status: str = 'completed'
    error: str = None
    history: list = field(default_factory=list)
    design: object = None
    objective: float = None
    penalized: float = None
    max_violation: float = None
    feasible: bool = False
    fe_solves: int = 0
    modal_solves: int = 0
    adjoint_solves: int = 0
    wall_time: float = 0.0

    @property
    def iterations(self):
        return len(self.history)

    def add(self, iteration, phase, temperature, evaluation, penalty_factor,
            choices=()):
        record = IterationRecord(
            iteration=iteration,
            phase=phase,
            temperature=temperature,
            objective=evaluation.objective,
            penalized=penalized_objective(
                evaluation.objective, evaluation.constraints, penalty_factor),
            max_violation=evaluation.max_violation,
            choices=tuple(choices),
            )
        self.history.append(record)
        self.fe_solves += evaluation.primal_solves + evaluation.modal_solves
        self.modal_solves += evaluation.modal_solves
        self.adjoint_solves += evaluation.adjoint_solves
        return record

    def abort(self, exc):
        self.status = 'aborted'
        self.error = str(exc)
        logger.error("Run {} (seed {}) aborted: {}".format(
            self.method, self.seed, exc))

    def finish(self, problem, design, penalty_factor, alternatives=()):
        """Evaluates the final *design* and fills in the results.

        Of *design* and *alternatives*, the design ranked first by
        :func:`selection_key` is reported.
        """
        self.design = design
        best, error = None, None
        for candidate in (design,) + tuple(alternatives):
            try:
                evaluation = problem.evaluate(
                    candidate.x, choices=candidate.choices)
            except FrameoptError as exc:
                error = exc
                continue
            penalized = penalized_objective(
                evaluation.objective, evaluation.constraints, penalty_factor)
            key = selection_key(evaluation.max_violation, penalized)
            if best is None or key < best[0]:
                best = (key, candidate, evaluation)
        if best is None:
            if self.status != 'aborted':
                self.abort(error)
            return self

        (_, self.penalized), self.design, evaluation = best
        self.objective = evaluation.objective
        self.max_violation = evaluation.max_violation
        self.feasible = self.max_violation <= FEASIBILITY_TOLERANCE
        if not self.feasible:
            logger.warning(
                "Run {} (seed {}) ended infeasible, max violation {:.4g}"
                .format(self.method, self.seed, self.max_violation))
        return self

    def to_frame(self):
        """The convergence trace as a DataFrame."""
        columns = ['iteration', 'phase', 'temperature', 'objective',
                   'penalized', 'max_violation']
        return pd.DataFrame(
            [{key: getattr(rec, key) for key in columns}
             for rec in self.history],
            columns=columns,
            )

    def to_dict(self):
        result = asdict(self)
        del result['history']
        result['iterations'] = self.iterations
        return result


class GSMO(Optimizer):
    """Gumbel-softmax optimizer that updates all variables jointly.

    Each iteration draws a Gumbel sample per categorical variable,
    solves the model at the hard choices and current continuous
    values, computes the penalized gradients with one adjoint per
    function and takes a projected gradient step.

    Logits move by *logit_step* along bias-corrected gradient moments
    (``logit_update='adam'``) or by *step_size* along the plain gradient
    (``logit_update='sgd'``).  The reported design is the most probable
    one unless a sampled design ranks better by :func:`selection_key`.
    """
    method = 'gsmo'

    def __init__(
        self,
        step_size=1e-3,
        max_iterations=100,
        penalty_factor=1000.0,
        initial_temp=100.0,
        decay=0.9,
        min_temp=0.01,
        samples=1,
        convergence_tol=0.0,
        jacobian_temperature_scaling=True,
        logit_update='adam',
        logit_step=0.1,
        seed=None,
    ):
        self.step_size = step_size
        self.max_iterations = max_iterations
        self.penalty_factor = penalty_factor
        self.initial_temp = initial_temp
        self.decay = decay
        self.min_temp = min_temp
        self.samples = samples
        self.convergence_tol = convergence_tol
        self.jacobian_temperature_scaling = jacobian_temperature_scaling
        self.logit_update = logit_update
        self.logit_step = logit_step
        self.seed = seed

    def _check_common(self):
        if not self.step_size > 0:
            raise ConfigurationError("step_size must be positive")
        if self.penalty_factor < 0:
            raise ConfigurationError("penalty_factor must not be negative")
        if self.logit_update not in LOGIT_UPDATES:
            raise ConfigurationError(
                "logit_update must be one of {}".format(
                    ', '.join(LOGIT_UPDATES)))
        if self.logit_update == 'adam' and not self.logit_step > 0:
            raise ConfigurationError("logit_step must be positive")
        return AnnealSchedule(self.initial_temp, self.decay, self.min_temp)

    def _check_params(self):
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must not be negative")
        return self._check_common()

    def _moments(self, logits):
        if self.logit_update == 'adam':
            return LogitMoments(logits)
        return None

    def _logit_step(self):
        if self.logit_update == 'adam':
            return self.logit_step
        return self.step_size

    def _draw(self, logits, rng, tau):
        return [draw_sample_state(
            theta, rng, tau, samples=self.samples,
            temperature_scaling=self.jacobian_temperature_scaling)
            for theta in logits]

    def _step(self, problem, record, iteration, phase, tau, iterate, rng):
        """Samples, solves and records one iteration; returns the
        penalized gradients.
        """
        samples = self._draw(iterate.logits, rng, tau)
        choices = [sample.hard.index for sample in samples]
        evaluation = problem.evaluate(
            iterate.x, choices=choices, gradients=True)
        rec = record.add(
            iteration, phase, tau, evaluation, self.penalty_factor, choices)
        if problem.space.n_categorical:
            iterate.consider(rec, iterate.x, choices)
        logger.debug(
            "{} iteration {} ({}): tau={:.4g} objective={:.6g} "
            "penalized={:.6g} max violation={:.4g}".format(
                self.method, iteration, phase, tau, rec.objective,
                rec.penalized, rec.max_violation))

        weights = penalty_weights(
            evaluation.constraints, self.penalty_factor)
        grad_x, grad_a = evaluation.gradients.combine(weights)
        grad_theta = [
            grad @ var.attributes.values @ sample.jacobian
            for grad, var, sample in zip(
                grad_a, problem.space.categorical, samples)]
        return grad_x, grad_theta

    def _converged(self, record):
        if self.convergence_tol <= 0 or record.iterations < 2:
            return False
        previous, current = (rec.penalized for rec in record.history[-2:])
        change = abs(current - previous)
        return change <= self.convergence_tol * max(
            abs(previous), np.finfo(float).tiny)

    def _initial(self, problem):
        space = problem.space
        return (space.initial_x(problem.model),
                [np.zeros(var.n_choices) for var in space.categorical])

    def run(self, problem, rng=None):
        schedule = self._check_params()
        if rng is None:
            rng = make_rng(self.seed)
        record = RunRecord(method=self.method, seed=self.seed)
        iterate = Iterate(*self._initial(problem))

        with timer() as elapsed:
            try:
                self._optimize(problem, schedule, rng, record, iterate)
            except FrameoptError as exc:
                record.abort(exc)
            alternatives = ()
            if iterate.incumbent is not None:
                _, x, choices = iterate.incumbent
                alternatives = (extract_design(
                    problem.space, x, iterate.logits, choices=choices),)
            record.finish(
                problem,
                extract_design(problem.space, iterate.x, iterate.logits),
                self.penalty_factor,
                alternatives=alternatives)
        record.wall_time = elapsed['elapsed']
        logger.info(
            "{} run (seed {}) {} after {} iterations: objective={} "
            "feasible={}".format(
                self.method, self.seed, record.status, record.iterations,
                record.objective, record.feasible))
        return record

    def _optimize(self, problem, schedule, rng, record, iterate):
        moments = self._moments(iterate.logits)
        for k in range(self.max_iterations):
            tau = schedule.temperature(k)
            grad_x, grad_theta = self._step(
                problem, record, k, 'joint', tau, iterate, rng)
            iterate.x, iterate.logits = update_step(
                problem.space, iterate.x, iterate.logits, grad_x, grad_theta,
                self.step_size, logit_step=self._logit_step(),
                moments=moments)
            if self._converged(record):
                logger.info("{} converged after {} iterations".format(
                    self.method, k + 1))
                break


class BiGSMO(GSMO):
    """Bilevel variant of :class:`GSMO`.

    Each of *outer_iterations* passes runs *inner_iterations* steps that
    update only the logits, then re-solves and updates only the
    continuous variables.  Without categorical variables the inner loop
    is skipped; without continuous variables the outer step is skipped.
    The temperature follows the global iteration count.  The iteration
    budget is set by the two counts; passing *max_iterations* is an
    error.
    """
    method = 'bigsmo'

    def __init__(
        self,
        step_size=1e-3,
        outer_iterations=10,
        inner_iterations=10,
        penalty_factor=1000.0,
        initial_temp=100.0,
        decay=0.9,
        min_temp=0.01,
        samples=1,
        convergence_tol=0.0,
        jacobian_temperature_scaling=True,
        logit_update='adam',
        logit_step=0.1,
        seed=None,
        max_iterations=None,
    ):
        super().__init__(
            step_size=step_size,
            max_iterations=max_iterations,
            penalty_factor=penalty_factor,
            initial_temp=initial_temp,
            decay=decay,
            min_temp=min_temp,
            samples=samples,
            convergence_tol=convergence_tol,
            jacobian_temperature_scaling=jacobian_temperature_scaling,
            logit_update=logit_update,
            logit_step=logit_step,
            seed=seed,
            )
        self.outer_iterations = outer_iterations
        self.inner_iterations = inner_iterations

    def _check_params(self):
        if self.max_iterations is not None:
            raise ConfigurationError(
                "bigsmo takes outer_iterations and inner_iterations, "
                "not max_iterations")
        if self.outer_iterations < 0 or self.inner_iterations < 0:
            raise ConfigurationError("iteration counts must not be negative")
        return self._check_common()

    def _optimize(self, problem, schedule, rng, record, iterate):
        space = problem.space
        moments = self._moments(iterate.logits)
        k = 0
        for outer in range(self.outer_iterations):
            if space.n_categorical:
                for inner in range(self.inner_iterations):
                    tau = schedule.temperature(k)
                    _, grad_theta = self._step(
                        problem, record, k, 'categorical', tau, iterate, rng)
                    _, iterate.logits = update_step(
                        space, iterate.x, iterate.logits,
                        np.zeros(space.n_continuous), grad_theta,
                        self.step_size, logit_step=self._logit_step(),
                        moments=moments)
                    k += 1
            if space.n_continuous:
                tau = schedule.temperature(k)
                grad_x, grad_theta = self._step(
                    problem, record, k, 'continuous', tau, iterate, rng)
                iterate.x, _ = update_step(
                    space, iterate.x, iterate.logits, grad_x,
                    [np.zeros_like(g) for g in grad_theta], self.step_size)
                k += 1
            if self._converged(record):
                logger.info("{} converged after {} outer passes".format(
                    self.method, outer + 1))
                break
