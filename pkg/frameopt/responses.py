"""Objective and constraint functions, and the optimization problem
that evaluates them.

Constraints are normalized so that ``g <= 0`` means satisfied.  Every
response reads the displacements of a single load case, which
determines the right hand side of its adjoint system.
"""

from dataclasses import dataclass

import numpy as np

from . import fem
from .adjoint import sensitivities
from .fem import COLUMN
from .fem import fd_step
from .interfaces import ConfigurationError
from .interfaces import NumericalError


class Response:
    """A scalar function of a configuration and its solution."""

    kind = None
    load_case = 0
    needs_modal = False

    @property
    def name(self):
        return self.kind

    def value(self, config, state, modal=None):
        raise NotImplementedError()  # pragma: no cover

    def state_gradient(self, config, state):
        """``dr/du`` as a full dof vector, for :attr:`load_case`."""
        return np.zeros(config.model.n_dofs)

    def depends_on(self, config, param):
        """Whether the value depends on *param* at fixed displacements."""
        return False

    def explicit_partial(self, config, state, param):
        """``dr/dp`` at fixed displacements, by central differences."""
        if not self.depends_on(config, param):
            return 0.0
        h = fd_step(param, config.value(param))
        return (self.value(config.perturbed(param, h), state) -
                self.value(config.perturbed(param, -h), state)) / (2 * h)

    def modal_partial(self, config, modal, derivatives):
        """Contribution through the vibration mode; zero unless the
        response reads it.
        """
        return 0.0

    def __repr__(self):
        return "<{} {}>".format(type(self).__name__, self.name)


class Constant(Response):
    kind = 'constant'

    def __init__(self, value=0.0):
        self.constant = value

    def value(self, config, state, modal=None):
        return self.constant


class Mass(Response):
    kind = 'mass'

    def value(self, config, state, modal=None):
        return fem.mass(config)

    def depends_on(self, config, param):
        return param.kind == 'coordinate' or param.attribute in (
            COLUMN['area'], COLUMN['density'])

    def explicit_partial(self, config, state, param):
        if param.kind == 'property':
            e, column = param.index, param.attribute
            length, _ = config.frame(e)
            if column == COLUMN['area']:
                return config.props[e, COLUMN['density']] * length
            if column == COLUMN['density']:
                return config.props[e, COLUMN['area']] * length
            return 0.0
        return super().explicit_partial(config, state, param)


class Compliance(Response):
    """Work of the applied loads, ``f^T u``."""
    kind = 'compliance'

    def __init__(self, load_case=0):
        self.load_case = load_case

    def value(self, config, state, modal=None):
        return fem.compliance(state, self.load_case)

    def state_gradient(self, config, state):
        return state.loads[:, self.load_case].copy()

    def depends_on(self, config, param):
        return True

    def explicit_partial(self, config, state, param):
        df = fem.load_parameter_derivative(config, param)[:, self.load_case]
        return float(df @ state.displacements[:, self.load_case])


class StrainEnergy(Response):
    """``1/2 u^T K u``."""
    kind = 'strain_energy'

    def __init__(self, load_case=0):
        self.load_case = load_case

    def value(self, config, state, modal=None):
        return fem.strain_energy(state, self.load_case)

    def state_gradient(self, config, state):
        return state.stiffness @ state.displacements[:, self.load_case]

    def depends_on(self, config, param):
        return True

    def explicit_partial(self, config, state, param):
        u = state.displacements[:, self.load_case]
        return 0.5 * float(
            u @ fem.stiffness_parameter_derivative(config, param, u))


class Displacement(Response):
    """``|u| / limit - 1`` for one dof."""
    kind = 'displacement'

    def __init__(self, node, dof, limit, load_case=0):
        if not limit > 0:
            raise ConfigurationError("Displacement limit must be positive")
        self.node = node
        self.dof = dof
        self.limit = limit
        self.load_case = load_case

    @property
    def name(self):
        return "displacement[{},{},{}]".format(
            self.node, self.dof, self.load_case)

    def value(self, config, state, modal=None):
        return abs(state.displacement(
            self.node, self.dof, self.load_case)) / self.limit - 1.0

    def state_gradient(self, config, state):
        index = config.model.dof_index(self.node, self.dof)
        grad = np.zeros(config.model.n_dofs)
        grad[index] = np.sign(
            state.displacements[index, self.load_case]) / self.limit
        return grad


class Stress(Response):
    """``sigma / sigma_yield - 1`` for one element."""
    kind = 'stress'

    def __init__(self, element, load_case=0):
        self.element = element
        self.load_case = load_case

    @property
    def name(self):
        return "stress[{},{}]".format(self.element, self.load_case)

    def _index(self, config):
        return config.model.element_index[self.element]

    def _element_displacements(self, config, state):
        dofs = config.model.element_dofs[self._index(config)]
        return dofs, state.displacements[dofs, self.load_case]

    def _yield(self, config):
        return config.props[self._index(config), COLUMN['yield_stress']]

    def value(self, config, state, modal=None):
        if config is state.config:
            stress = state.element_stresses(
                self.load_case)[self._index(config)]
        else:
            _, u_element = self._element_displacements(config, state)
            stress = fem.stress_from_displacements(
                config, self._index(config), u_element, self.load_case)
        return stress / self._yield(config) - 1.0

    def state_gradient(self, config, state):
        dofs, u_element = self._element_displacements(config, state)
        _, gradient = fem.stress_with_gradient(
            config, self._index(config), u_element, self.load_case)
        grad = np.zeros(config.model.n_dofs)
        grad[dofs] = gradient / self._yield(config)
        return grad

    def depends_on(self, config, param):
        e = self._index(config)
        if param.kind == 'property':
            return param.index == e
        return param.index in config.model.element_nodes[e]


class Frequency(Response):
    """``1 - f / minimum`` for the lowest natural frequency ``f``."""
    kind = 'frequency'
    needs_modal = True

    def __init__(self, minimum):
        if not minimum > 0:
            raise ConfigurationError("Frequency minimum must be positive")
        self.minimum = minimum

    def value(self, config, state, modal=None):
        return 1.0 - modal.frequency / self.minimum

    def modal_partial(self, config, modal, derivatives):
        if modal.degenerate:
            raise NumericalError(
                "Lowest eigenvalue is repeated (relative gap {:.2g}); its "
                "gradient is not defined".format(modal.gap))
        phi = modal.mode
        d_eigenvalue = 0.0
        for deriv in derivatives:
            local = phi[deriv.dofs]
            d_eigenvalue += local @ deriv.stiffness @ local
            d_eigenvalue -= modal.eigenvalue * local @ (deriv.masses * local)
        d_frequency = d_eigenvalue / (8 * np.pi ** 2 * modal.frequency)
        return -d_frequency / self.minimum


class CoordinateRatio(Response):
    """``1 - x_f / x_0`` where ``x_0`` is the position of *node* along
    *axis* relative to *origin* and ``x_f`` the same after deformation.
    Satisfied when the node moves outward.
    """
    kind = 'coordinate_ratio'

    def __init__(self, node, axis, origin=0.0, load_case=0):
        self.node = node
        self.axis = axis
        self.origin = origin
        self.load_case = load_case

    @property
    def name(self):
        return "coordinate_ratio[{},{},{}]".format(
            self.node, fem.AXES[self.axis], self.load_case)

    def _reference(self, config):
        index = config.model.node_index[self.node]
        reference = config.coords[index, self.axis] - self.origin
        if reference == 0:
            raise ConfigurationError(
                "Node {} lies on the reference plane; its coordinate ratio "
                "is undefined".format(self.node))
        return reference

    def value(self, config, state, modal=None):
        u = state.displacement(self.node, self.axis, self.load_case)
        return -u / self._reference(config)

    def state_gradient(self, config, state):
        grad = np.zeros(config.model.n_dofs)
        grad[config.model.dof_index(self.node, self.axis)] = (
            -1.0 / self._reference(config))
        return grad

    def depends_on(self, config, param):
        return (param.kind == 'coordinate' and
                param.index == config.model.node_index[self.node] and
                param.attribute == self.axis)

    def explicit_partial(self, config, state, param):
        if not self.depends_on(config, param):
            return 0.0
        u = state.displacement(self.node, self.axis, self.load_case)
        return u / self._reference(config) ** 2


@dataclass
class Evaluation:
    """Function values at one design, plus the analysis states and,
    if requested, the gradients.
    """
    objective: float
    constraints: np.ndarray
    config: object
    state: object
    modal: object = None
    gradients: object = None
    primal_solves: int = 1
    modal_solves: int = 0
    adjoint_solves: int = 0

    @property
    def values(self):
        return np.concatenate([[self.objective], self.constraints])

    @property
    def max_violation(self):
        if self.constraints.size == 0:
            return 0.0
        return max(0.0, float(self.constraints.max()))


class OptimizationProblem:
    """A model, a design space acting on it, an objective and a list
    of normalized constraints.
    """

    def __init__(self, model, space, objective, constraints=(), name=''):
        self.model = model
        self.space = space
        self.objective = objective
        self.constraints = list(constraints)
        self.name = name or model.name
        space.validate(model)
        for response in self.functions:
            if not 0 <= response.load_case < model.n_load_cases:
                raise ConfigurationError(
                    "{!r} refers to load case {}, but the model has {}".format(
                        response, response.load_case, model.n_load_cases))

    @property
    def functions(self):
        return [self.objective] + self.constraints

    @property
    def needs_modal(self):
        return any(response.needs_modal for response in self.functions)

    def evaluate(self, x, choices=None, attributes=None, gradients=False):
        """Runs the analysis of one design.

        :param x: Continuous values.
        :param choices: One choice index per categorical variable.
        :param attributes: Attribute vectors, one per categorical
          variable, instead of *choices*.
        :param gradients: Also compute adjoint gradients.
        :return: An :class:`Evaluation`.
        """
        config = self.space.configure(self.model, x, choices, attributes)
        state = fem.solve(config)
        modal = None
        if self.needs_modal:
            modal = fem.smallest_frequency(config, state)

        values = np.array([
            response.value(config, state, modal)
            for response in self.functions])
        if not np.all(np.isfinite(values)):
            raise NumericalError("Non-finite response values {}".format(
                values))

        evaluation = Evaluation(
            objective=float(values[0]),
            constraints=values[1:],
            config=config,
            state=state,
            modal=modal,
            modal_solves=int(modal is not None),
            )
        if gradients:
            evaluation.gradients = sensitivities(self, config, state, modal)
            evaluation.adjoint_solves = evaluation.gradients.adjoint_solves
        return evaluation
