"""Adjoint sensitivities of response functions.

For a response ``J(p, u(p))`` with ``K(p) u = f(p)``:

    dJ/dp = dJ/dp|_u - lambda^T (dK/dp u - df/dp),   K lambda = dJ/du

Adjoints are solved with the factorization already computed for the
displacements, and only on the free dofs.  Gradients with respect to
the logits of a categorical variable are obtained by chaining the
attribute gradient through the attribute matrix and the Jacobian of
the soft sample.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import linalg

from .fem import element_derivatives
from .fem import fd_step
from .fem import property_step
from .gsm import gsm_soft_sample
from .gsm import sample_gumbel
from .gsm import soft_sample_jacobian
from .interfaces import NumericalError
from .util import logger

#: Central difference error estimates smaller than this many machine
#: epsilons of the function value are considered noise.
NOISE_EPSILONS = 1e3


def solve_adjoint(state, rhs):
    """Solves ``K_ff lambda_f = rhs_f``; fixed dofs get zero adjoints.

    :param rhs: A full dof vector or an ``(n_dofs, k)`` matrix.
    """
    rhs = np.asarray(rhs, dtype=float)
    lam = np.zeros_like(rhs)
    lam[state.free] = linalg.cho_solve(state.factor, rhs[state.free])
    return lam


def parameter_sensitivity(config, state, response, lam, param,
                          derivatives=None, modal=None):
    """Total derivative of *response* with respect to one parameter."""
    if derivatives is None:
        derivatives = element_derivatives(config, param)
    u = state.displacements[:, response.load_case]
    total = response.explicit_partial(config, state, param)
    for deriv in derivatives:
        residual = (deriv.stiffness @ u[deriv.dofs] -
                    deriv.loads[:, response.load_case])
        total -= lam[deriv.dofs] @ residual
    if response.needs_modal:
        total += response.modal_partial(config, modal, derivatives)
    return total


def grad_continuous(config, state, response, lam, variable, modal=None,
                    pairs=None):
    """Derivative of *response* with respect to a continuous variable.

    :param pairs: The variable's chain from
      :meth:`~frameopt.design.DesignSpace.continuous_parameters`; by
      default its binding's own parameters.
    """
    if pairs is None:
        pairs = variable.binding.parameters(config.model)
    return sum(
        factor * parameter_sensitivity(
            config, state, response, lam, param, modal=modal)
        for param, factor in pairs)


def grad_attributes(config, state, response, lam, variable, modal=None):
    """Derivatives of *response* with respect to the attribute values
    of a categorical variable, one entry per attribute row.
    """
    return np.array([
        sum(parameter_sensitivity(
            config, state, response, lam, param, modal=modal)
            for param in params)
        for params in variable.parameters(config.model)])


def grad_logits(grad_a, attributes, jacobian):
    """Chains attribute gradients to the logits:
    ``jacobian^T (A^T grad_a)``.

    *grad_a* may be a vector or one row per function.
    """
    grad_a = np.asarray(grad_a, dtype=float)
    return grad_a @ attributes.values @ jacobian


@dataclass
class GradientBundle:
    """Gradients of the objective (row 0) and all constraints.

    :attr continuous: ``(n_functions, n_continuous)``
    :attr attributes: one ``(n_functions, n_attributes)`` array per
      categorical variable.
    """
    continuous: np.ndarray
    attributes: list
    adjoint_solves: int = 0

    def combine(self, weights):
        """Gradients of ``sum(weights * functions)``."""
        weights = np.asarray(weights, dtype=float)
        return (weights @ self.continuous,
                [weights @ grad for grad in self.attributes])

    def logits(self, space, jacobians):
        """Per categorical variable, the ``(n_functions, n_choices)``
        gradients with respect to its logits.
        """
        return [grad_logits(grad, var.attributes, jac)
                for grad, var, jac in zip(
                    self.attributes, space.categorical, jacobians)]


def sensitivities(problem, config, state, modal=None):
    """Gradients of all of *problem*'s functions with respect to its
    continuous variables and categorical attributes.

    Solves one adjoint per function, batched per load case, and
    computes the element derivatives of each parameter once.
    """
    model, space = problem.model, problem.space
    functions = problem.functions

    lam = np.zeros((model.n_dofs, len(functions)))
    for load_case in range(model.n_load_cases):
        columns = [j for j, response in enumerate(functions)
                   if response.load_case == load_case]
        if not columns:
            continue
        rhs = np.column_stack([
            functions[j].state_gradient(config, state) for j in columns])
        lam[:, columns] = solve_adjoint(state, rhs)
    load_cases = [response.load_case for response in functions]

    cache = {}

    def total(param):
        if param not in cache:
            derivatives = element_derivatives(config, param)
            grad = np.zeros(len(functions))
            for deriv in derivatives:
                residual = (deriv.stiffness @ state.displacements[deriv.dofs]
                            - deriv.loads)[:, load_cases]
                grad -= np.sum(lam[deriv.dofs] * residual, axis=0)
            for j, response in enumerate(functions):
                if response.depends_on(config, param):
                    grad[j] += response.explicit_partial(config, state, param)
                if response.needs_modal:
                    grad[j] += response.modal_partial(
                        config, modal, derivatives)
            cache[param] = grad
        return cache[param]

    continuous = np.zeros((len(functions), space.n_continuous))
    chains = space.continuous_parameters(model)
    for i, pairs in enumerate(chains):
        for param, factor in pairs:
            continuous[:, i] += factor * total(param)

    attributes = []
    for var in space.categorical:
        rows = [sum(total(param) for param in params)
                for params in var.parameters(model)]
        attributes.append(np.column_stack(rows))

    bundle = GradientBundle(continuous, attributes, len(functions))
    finite = np.all(np.isfinite(continuous)) and all(
        np.all(np.isfinite(grad)) for grad in attributes)
    if not finite:
        raise NumericalError("Non-finite gradients")
    return bundle


@dataclass
class FdReport:
    """Comparison of analytic and central-difference derivatives."""
    frame: pd.DataFrame
    tolerance: float

    @property
    def max_error(self):
        if self.frame.empty:
            return 0.0
        return float(self.frame['relative_error'].max())

    @property
    def passed(self):
        return self.max_error <= self.tolerance


def fd_check(function, gradient, point, h=1e-6, tolerance=1e-5, steps=None,
             function_names=None, variable_names=None):
    """Compares ``gradient(point)`` against central differences of
    ``function``.

    :param function: Maps a point to a vector of ``k`` values.
    :param gradient: Maps a point to a ``(k, n)`` matrix.
    :param steps: Per-variable steps; default ``h * max(1, |x_i|)``.
    :return: An :class:`FdReport` with one row per function/variable pair.
    """
    point = np.asarray(point, dtype=float)
    values = np.atleast_1d(function(point))
    analytic = np.atleast_2d(gradient(point))
    if steps is None:
        steps = h * np.maximum(1.0, np.abs(point))
    steps = np.asarray(steps, dtype=float)

    numeric = np.zeros_like(analytic)
    for i, step in enumerate(steps):
        shift = np.zeros_like(point)
        shift[i] = step
        numeric[:, i] = (np.atleast_1d(function(point + shift)) -
                         np.atleast_1d(function(point - shift))) / (2 * step)

    noise = (NOISE_EPSILONS * np.finfo(float).eps *
             np.maximum(np.abs(values), np.finfo(float).tiny))
    rows = []
    for j in range(analytic.shape[0]):
        scale = max(np.abs(analytic[j]).max(), np.abs(numeric[j]).max())
        for i in range(analytic.shape[1]):
            a, f = analytic[j, i], numeric[j, i]
            if max(abs(a), abs(f)) * steps[i] <= noise[j]:
                error = 0.0
            else:
                error = abs(a - f) / max(abs(a), abs(f), 1e-4 * scale)
            rows.append({
                'function': function_names[j] if function_names else j,
                'variable': variable_names[i] if variable_names else i,
                'analytic': a,
                'finite_difference': f,
                'relative_error': error,
                })
    frame = pd.DataFrame(
        rows, columns=['function', 'variable', 'analytic',
                       'finite_difference', 'relative_error'])
    return FdReport(frame, tolerance)


def _continuous_step(model, variable, value):
    param, _ = variable.binding.parameters(model)[0]
    return fd_step(param, value)


def audit_gradients(problem, rng, x=None, choices=None, tau=1.0, h=1e-6,
                    tolerance=1e-5):
    """Audits the adjoint gradients of *problem* against central
    differences at one design.

    Covers the continuous variables, the attribute values of each
    categorical variable at its selected choice, and the logits of each
    categorical variable through the soft-relaxed chain with frozen
    Gumbel noise.  Continuous variables and attributes use the steps
    of :func:`~frameopt.fem.fd_step`; *h* is the step of the logits.

    :return: A list of ``(label, FdReport)`` tuples.
    """
    space, model = problem.space, problem.model
    if x is None or choices is None:
        x_random, choices_random = space.random_design(rng)
        x = x_random if x is None else np.asarray(x, dtype=float)
        choices = choices_random if choices is None else choices
    names = [response.name for response in problem.functions]
    hard = space.attributes_of(choices)
    reports = []

    if space.n_continuous:
        steps = [
            _continuous_step(model, var, value)
            for var, value in zip(space.continuous, x)]
        reports.append(('continuous', fd_check(
            lambda z: problem.evaluate(z, attributes=hard).values,
            lambda z: problem.evaluate(
                z, attributes=hard, gradients=True).gradients.continuous,
            x, steps=steps, tolerance=tolerance, function_names=names,
            variable_names=[var.name for var in space.continuous],
            )))

    for m, var in enumerate(space.categorical):
        def with_attributes(a, m=m):
            attributes = list(hard)
            attributes[m] = a
            return attributes

        reports.append(('attributes:{}'.format(var.name), fd_check(
            lambda a: problem.evaluate(
                x, attributes=with_attributes(a)).values,
            lambda a, m=m: problem.evaluate(
                x, attributes=with_attributes(a),
                gradients=True).gradients.attributes[m],
            hard[m],
            steps=property_step(hard[m]),
            tolerance=tolerance, function_names=names,
            variable_names=var.attributes.names,
            )))

        noise = sample_gumbel(rng, var.n_choices)
        theta = rng.standard_normal(var.n_choices)

        def relaxed(t, var=var, noise=noise):
            return var.attributes.mix(gsm_soft_sample(t, noise, tau))

        def logit_gradient(t, m=m, var=var, noise=noise, relaxed=relaxed):
            evaluation = problem.evaluate(
                x, attributes=with_attributes(relaxed(t)), gradients=True)
            jac = soft_sample_jacobian(gsm_soft_sample(t, noise, tau), tau)
            return grad_logits(
                evaluation.gradients.attributes[m], var.attributes, jac)

        reports.append(('logits:{}'.format(var.name), fd_check(
            lambda t, relaxed=relaxed: problem.evaluate(
                x, attributes=with_attributes(relaxed(t))).values,
            logit_gradient, theta, h=h, tolerance=tolerance,
            function_names=names, variable_names=var.labels,
            )))

    for label, report in reports:
        logger.info("Gradient audit {}: max relative error {:.3g}".format(
            label, report.max_error))
    return reports
