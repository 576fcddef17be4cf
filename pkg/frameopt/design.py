"""Design variables and how they act on a model.

A :class:`DesignSpace` is a list of bounded continuous variables and a
list of categorical variables.  Continuous variables are bound to
model parameters through a binding.  A categorical variable selects
one column of its :class:`AttributeMatrix` and writes the column's
values into the properties of its elements.
"""

from dataclasses import dataclass

import numpy as np

from .fem import AXES
from .fem import COLUMN
from .fem import Configuration
from .fem import coordinate_parameter
from .fem import PROPERTIES
from .fem import property_parameter
from .gsm import softmax
from .interfaces import ConfigurationError


def _axis(axis):
    if isinstance(axis, str):
        if axis not in AXES:
            raise ConfigurationError("Unknown axis {!r}".format(axis))
        return AXES.index(axis)
    if axis not in (0, 1, 2):
        raise ConfigurationError("Unknown axis {!r}".format(axis))
    return axis


def _element_indices(model, elements):
    try:
        return [model.element_index[e] for e in elements]
    except KeyError as exc:
        raise ConfigurationError(
            "Binding refers to unknown element {}".format(exc.args[0]))


def _node_indices(model, nodes):
    try:
        return [model.node_index[n] for n in nodes]
    except KeyError as exc:
        raise ConfigurationError(
            "Binding refers to unknown node {}".format(exc.args[0]))


class PropertyBinding:
    """Sets the property *attribute* (a section or material attribute,
    or ``'orientation_angle'``) of all *elements* to the variable's
    value.
    """
    kind = 'property'

    def __init__(self, elements, attribute):
        if attribute not in COLUMN:
            raise ConfigurationError(
                "Unknown element property {!r}".format(attribute))
        self.elements = list(elements)
        self.attribute = attribute

    def parameters(self, model):
        return [(property_parameter(e, self.attribute), 1.0)
                for e in _element_indices(model, self.elements)]

    def apply(self, model, props, coords, value):
        props[_element_indices(model, self.elements),
              COLUMN[self.attribute]] = value

    def __repr__(self):
        return "PropertyBinding({!r}, {!r})".format(
            self.elements, self.attribute)


class NodeCoordinateBinding:
    """Sets coordinate *axis* of all *nodes* to the variable's value."""
    kind = 'node_coordinate'

    def __init__(self, nodes, axis):
        self.nodes = list(nodes)
        self.axis = _axis(axis)

    def parameters(self, model):
        return [(coordinate_parameter(n, self.axis), 1.0)
                for n in _node_indices(model, self.nodes)]

    def apply(self, model, props, coords, value):
        coords[_node_indices(model, self.nodes), self.axis] = value

    def __repr__(self):
        return "NodeCoordinateBinding({!r}, {!r})".format(
            self.nodes, AXES[self.axis])


class LengthBinding:
    """Moves the second node of *element* along the element's base
    direction so that the element gets the variable's value as its
    length.
    """
    kind = 'length'

    def __init__(self, element):
        self.element = element

    def ends(self, model):
        e, = _element_indices(model, [self.element])
        a, b = model.element_nodes[e]
        base = model.coordinates()
        direction = base[b] - base[a]
        return a, b, direction / np.linalg.norm(direction)

    def parameters(self, model):
        _, b, direction = self.ends(model)
        return [(coordinate_parameter(b, axis), direction[axis])
                for axis in range(3)]

    def apply(self, model, props, coords, value):
        a, b, direction = self.ends(model)
        coords[b] = coords[a] + value * direction

    def __repr__(self):
        return "LengthBinding({!r})".format(self.element)


@dataclass
class ContinuousVariable:
    name: str
    binding: object
    lower: float
    upper: float
    initial: float = None


class AttributeMatrix:
    """Attribute values of all choices of a categorical variable: one
    row per attribute named in *names*, one column per choice.
    """

    def __init__(self, names, values):
        self.names = list(names)
        self.values = np.atleast_2d(np.asarray(values, dtype=float))
        if len(set(self.names)) != len(self.names):
            raise ConfigurationError("Attribute names must be distinct")
        for name in self.names:
            if name not in COLUMN or name == 'orientation_angle':
                raise ConfigurationError(
                    "Unknown attribute {!r}; use one of {}".format(
                        name, ', '.join(PROPERTIES[:-1])))
        if self.values.shape[0] != len(self.names):
            raise ConfigurationError(
                "Attribute matrix has {} rows for {} names".format(
                    self.values.shape[0], len(self.names)))
        if self.values.shape[1] < 1:
            raise ConfigurationError("A categorical needs at least one choice")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("Attribute values must be finite")

    @property
    def n_choices(self):
        return self.values.shape[1]

    def mix(self, weights):
        """``A w``: the attributes of a one-hot or relaxed choice."""
        return self.values @ np.asarray(weights, dtype=float)


@dataclass
class CategoricalVariable:
    name: str
    elements: list
    attributes: AttributeMatrix
    labels: list = None

    def __post_init__(self):
        if self.labels is None:
            self.labels = [str(i) for i in range(self.n_choices)]
        if len(self.labels) != self.n_choices:
            raise ConfigurationError(
                "Categorical {!r} has {} labels for {} choices".format(
                    self.name, len(self.labels), self.n_choices))

    @property
    def n_choices(self):
        return self.attributes.n_choices

    def parameters(self, model):
        """Per attribute row, the element parameters it is written to."""
        indices = _element_indices(model, self.elements)
        return [[property_parameter(e, name) for e in indices]
                for name in self.attributes.names]


@dataclass
class Design:
    """A concrete design: continuous values and one choice per
    categorical variable.
    """
    x: np.ndarray
    choices: list
    probabilities: list = None
    labels: list = None


class DesignSpace:

    def __init__(self, continuous=(), categorical=()):
        self.continuous = list(continuous)
        self.categorical = list(categorical)

    @property
    def n_continuous(self):
        return len(self.continuous)

    @property
    def n_categorical(self):
        return len(self.categorical)

    @property
    def n_variables(self):
        return self.n_continuous + self.n_categorical

    @property
    def lower(self):
        return np.array([var.lower for var in self.continuous], dtype=float)

    @property
    def upper(self):
        return np.array([var.upper for var in self.continuous], dtype=float)

    def validate(self, model):
        """Checks bounds, that every binding targets an existing model
        parameter, and that no parameter is bound twice.

        :raises ConfigurationError:
        """
        seen = {}
        names = set()

        def claim(param, owner):
            if param in seen:
                raise ConfigurationError(
                    "Parameter {} is bound by both {!r} and {!r}".format(
                        param, seen[param], owner))
            seen[param] = owner

        for var in self.continuous + self.categorical:
            if var.name in names:
                raise ConfigurationError(
                    "Duplicate variable name {!r}".format(var.name))
            names.add(var.name)

        for var in self.continuous:
            if var.binding is None:
                raise ConfigurationError(
                    "Continuous variable {!r} is not bound".format(var.name))
            if not var.lower <= var.upper:
                raise ConfigurationError(
                    "Variable {!r}: lower bound exceeds upper bound".format(
                        var.name))
            for param, _ in var.binding.parameters(model):
                claim(param, var.name)

        for var in self.categorical:
            if not var.elements:
                raise ConfigurationError(
                    "Categorical {!r} is not bound to any element".format(
                        var.name))
            for params in var.parameters(model):
                for param in params:
                    claim(param, var.name)

    def continuous_parameters(self, model):
        """Per continuous variable, the ``(parameter, factor)`` pairs its
        derivative is chained through.

        A node placed by a :class:`LengthBinding` follows the element's
        first node, so every coordinate parameter of that node carries
        over to the placed node with the same factor.
        """
        followers = {}
        for var in self.continuous:
            if isinstance(var.binding, LengthBinding):
                a, b, _ = var.binding.ends(model)
                followers.setdefault(a, []).append(b)

        result = []
        for var in self.continuous:
            pairs = list(var.binding.parameters(model))
            seen = {param for param, _ in pairs}
            queue = list(pairs)
            while queue:
                param, factor = queue.pop()
                if param.kind != 'coordinate':
                    continue
                for node in followers.get(param.index, ()):
                    moved = coordinate_parameter(node, param.attribute)
                    if moved not in seen:
                        seen.add(moved)
                        pairs.append((moved, factor))
                        queue.append((moved, factor))
            result.append(pairs)
        return result

    def initial_x(self, model):
        """Initial values: the declared ones, else the model's base value
        clipped into the bounds.
        """
        base = model.configuration()
        x = np.empty(self.n_continuous)
        for i, var in enumerate(self.continuous):
            if var.initial is not None:
                value = var.initial
            else:
                param, factor = var.binding.parameters(model)[0]
                if isinstance(var.binding, LengthBinding):
                    a, b = model.element_nodes[model.element_index[
                        var.binding.element]]
                    value = np.linalg.norm(base.coords[b] - base.coords[a])
                else:
                    value = base.value(param)
            x[i] = np.clip(value, var.lower, var.upper)
        return x

    def check_dimensions(self, x, choices=None, attributes=None):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n_continuous:
            raise ConfigurationError(
                "Expected {} continuous values, got {}".format(
                    self.n_continuous, x.size))
        if attributes is not None:
            if len(attributes) != self.n_categorical:
                raise ConfigurationError(
                    "Expected attributes for {} categoricals, got {}".format(
                        self.n_categorical, len(attributes)))
        elif choices is not None:
            if len(choices) != self.n_categorical:
                raise ConfigurationError(
                    "Expected {} choices, got {}".format(
                        self.n_categorical, len(choices)))
            for var, choice in zip(self.categorical, choices):
                if not 0 <= choice < var.n_choices:
                    raise ConfigurationError(
                        "Choice {} out of range for {!r}".format(
                            choice, var.name))
        elif self.n_categorical:
            raise ConfigurationError("Categorical choices are required")
        return x

    def attributes_of(self, choices):
        return [var.attributes.values[:, choice]
                for var, choice in zip(self.categorical, choices)]

    def configure(self, model, x, choices=None, attributes=None):
        """The :class:`~frameopt.fem.Configuration` of a design.

        *attributes*, one attribute vector per categorical variable,
        takes precedence over *choices*; it allows evaluating relaxed
        mixtures of choices.
        """
        x = self.check_dimensions(x, choices, attributes)
        if attributes is None:
            attributes = self.attributes_of(choices or [])
        props = model.property_table()
        coords = model.coordinates()

        for var, values in zip(self.categorical, attributes):
            indices = _element_indices(model, var.elements)
            for name, value in zip(var.attributes.names, values):
                props[indices, COLUMN[name]] = value

        ordered = sorted(
            zip(self.continuous, x),
            key=lambda item: isinstance(item[0].binding, LengthBinding))
        for var, value in ordered:
            var.binding.apply(model, props, coords, value)
        return Configuration(model, props, coords)

    def random_design(self, rng):
        """A uniformly random design, used by audits and tests."""
        x = self.lower + rng.random(self.n_continuous) * (
            self.upper - self.lower)
        choices = [int(rng.integers(var.n_choices))
                   for var in self.categorical]
        return x, choices


def extract_design(space, x, logits, choices=None):
    """The design an optimizer reports: the most probable choice of
    every categorical (lowest index on ties), or the given *choices*,
    and the continuous values.
    """
    probabilities = [softmax(theta) for theta in logits]
    if choices is None:
        choices = [int(np.argmax(theta)) for theta in logits]
    else:
        choices = [int(choice) for choice in choices]
    return Design(
        x=np.array(x, dtype=float),
        choices=choices,
        probabilities=probabilities,
        labels=[var.labels[choice]
                for var, choice in zip(space.categorical, choices)],
        )
