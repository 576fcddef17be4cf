"""Linear finite element analysis of 3D truss and frame structures.

Every node carries six degrees of freedom ``(ux, uy, uz, rx, ry, rz)``.
Truss elements only connect translations; rotational dofs of nodes
that no beam element touches are restrained automatically.

A :class:`FrameModel` holds topology, materials, sections, supports
and loads.  The numbers that design variables act on (per-element
section and material properties, orientation angles and nodal
coordinates) live in a :class:`Configuration`, a pair of plain arrays
that optimizers modify without touching the model.
"""

from collections import namedtuple
from dataclasses import dataclass
from dataclasses import field
from functools import cached_property

import numpy as np
from scipy import linalg

from .interfaces import MechanismError
from .interfaces import ModelError
from .interfaces import NumericalError

DOF_NAMES = ('ux', 'uy', 'uz', 'rx', 'ry', 'rz')
DOFS_PER_NODE = 6
AXES = ('x', 'y', 'z')
ELEMENT_KINDS = ('truss', 'beam')

SECTION_ATTRIBUTES = (
    'area',
    'iyy',
    'izz',
    'torsion_constant',
    'max_fiber_distance_y',
    'max_fiber_distance_z',
    )
MATERIAL_ATTRIBUTES = (
    'youngs_modulus',
    'poisson_ratio',
    'density',
    'yield_stress',
    )
#: Columns of :attr:`Configuration.props`.
PROPERTIES = SECTION_ATTRIBUTES + MATERIAL_ATTRIBUTES + ('orientation_angle',)
COLUMN = {name: i for i, name in enumerate(PROPERTIES)}

#: Relative pivot size below which the reduced stiffness is singular.
PIVOT_TOLERANCE = 1e-13

#: Relative gap below which the lowest eigenvalue counts as repeated.
DEGENERACY_TOLERANCE = 1e-6

_Z = np.array([0.0, 0.0, 1.0])
_X = np.array([1.0, 0.0, 0.0])


Parameter = namedtuple('Parameter', ['kind', 'index', 'attribute'])
Parameter.__doc__ = """\
A single scalar of a :class:`Configuration`.

*kind* is ``'property'`` (then *index* is the element index and
*attribute* the column in :data:`PROPERTIES`) or ``'coordinate'``
(then *index* is the node index and *attribute* the axis 0, 1 or 2).
"""


def property_parameter(element_index, name):
    return Parameter('property', element_index, COLUMN[name])


def coordinate_parameter(node_index, axis):
    return Parameter('coordinate', node_index, axis)


def _is_geometric(param):
    return (param.kind == 'coordinate' or
            param.attribute == COLUMN['orientation_angle'])


#: Relative central difference steps for coordinates and orientation
#: angles, and for section and material properties.
GEOMETRIC_STEP = 1e-6
PROPERTY_STEP = 1e-3


def fd_step(param, value):
    """Finite difference step for *param* at *value*."""
    if _is_geometric(param):
        return GEOMETRIC_STEP * max(1.0, abs(value))
    return float(property_step(value))


def property_step(value):
    """Central difference step for a section or material value."""
    return np.where(value != 0, PROPERTY_STEP * np.abs(value), PROPERTY_STEP)


@dataclass(frozen=True)
class Node:
    id: int
    position: tuple


@dataclass(frozen=True)
class Material:
    name: str
    youngs_modulus: float
    poisson_ratio: float = 0.3
    density: float = 0.0
    yield_stress: float = np.inf

    def __post_init__(self):
        if not self.youngs_modulus > 0:
            raise ModelError(
                "Material {!r}: Young's modulus must be positive".format(
                    self.name))
        if not -1.0 < self.poisson_ratio < 0.5:
            raise ModelError(
                "Material {!r}: Poisson's ratio must be in (-1, 0.5)".format(
                    self.name))
        if self.density < 0:
            raise ModelError(
                "Material {!r}: density must not be negative".format(
                    self.name))
        if not self.yield_stress > 0:
            raise ModelError(
                "Material {!r}: yield stress must be positive".format(
                    self.name))

    @property
    def shear_modulus(self):
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))

    def attributes(self):
        return {name: getattr(self, name) for name in MATERIAL_ATTRIBUTES}


@dataclass(frozen=True)
class CrossSection:
    """Section properties in the element's local frame.

    Local ``z`` is the height direction of the profile, so ``iyy``
    governs bending in the local x-z plane and ``max_fiber_distance_z``
    goes with it.
    """
    name: str
    area: float
    iyy: float = 0.0
    izz: float = 0.0
    torsion_constant: float = 0.0
    max_fiber_distance_y: float = 0.0
    max_fiber_distance_z: float = 0.0

    def __post_init__(self):
        if not self.area > 0:
            raise ModelError(
                "Section {!r}: area must be positive".format(self.name))
        for name in SECTION_ATTRIBUTES[1:]:
            if getattr(self, name) < 0:
                raise ModelError("Section {!r}: {} must not be negative"
                                 .format(self.name, name))

    def attributes(self):
        return {name: getattr(self, name) for name in SECTION_ATTRIBUTES}

    @classmethod
    def circle(cls, name, radius):
        """Solid circle."""
        _check_positive(name, radius=radius)
        return cls(
            name=name,
            area=np.pi * radius ** 2,
            iyy=np.pi * radius ** 4 / 4,
            izz=np.pi * radius ** 4 / 4,
            torsion_constant=np.pi * radius ** 4 / 2,
            max_fiber_distance_y=radius,
            max_fiber_distance_z=radius,
            )

    @classmethod
    def rectangle(cls, name, height, width):
        """Solid rectangle; the torsion constant uses Roark's
        approximation.
        """
        _check_positive(name, height=height, width=width)
        a, b = max(height, width), min(height, width)
        torsion = a * b ** 3 * (
            1.0 / 3 - 0.21 * (b / a) * (1 - b ** 4 / (12 * a ** 4)))
        return cls(
            name=name,
            area=height * width,
            iyy=width * height ** 3 / 12,
            izz=height * width ** 3 / 12,
            torsion_constant=torsion,
            max_fiber_distance_y=width / 2,
            max_fiber_distance_z=height / 2,
            )

    @classmethod
    def box(cls, name, height, width, thickness):
        """Thin-walled rectangular tube of uniform wall thickness."""
        _check_walls(name, height, width, thickness, 2)
        h_in, w_in = height - 2 * thickness, width - 2 * thickness
        h_mid, w_mid = height - thickness, width - thickness
        return cls(
            name=name,
            area=height * width - h_in * w_in,
            iyy=(width * height ** 3 - w_in * h_in ** 3) / 12,
            izz=(height * width ** 3 - h_in * w_in ** 3) / 12,
            torsion_constant=(
                2 * thickness * h_mid ** 2 * w_mid ** 2 / (h_mid + w_mid)),
            max_fiber_distance_y=width / 2,
            max_fiber_distance_z=height / 2,
            )

    @classmethod
    def i_profile(cls, name, height, width, thickness):
        """I-profile with flanges and web of the same thickness."""
        _check_walls(name, height, width, thickness, 2)
        web = height - 2 * thickness
        return cls(
            name=name,
            area=2 * width * thickness + web * thickness,
            iyy=(width * height ** 3 - (width - thickness) * web ** 3) / 12,
            izz=(2 * thickness * width ** 3 + web * thickness ** 3) / 12,
            torsion_constant=(2 * width + web) * thickness ** 3 / 3,
            max_fiber_distance_y=width / 2,
            max_fiber_distance_z=height / 2,
            )

    @classmethod
    def channel(cls, name, height, width, thickness):
        """U-channel: a web of the full height and two flanges, all of
        the same thickness.
        """
        _check_walls(name, height, width, thickness, 2)
        t = thickness
        flange = width - t
        web_area, flange_area = height * t, flange * t
        area = web_area + 2 * flange_area
        flange_center = t + flange / 2
        centroid = (web_area * t / 2 + 2 * flange_area * flange_center) / area
        izz = (height * t ** 3 / 12 + web_area * (centroid - t / 2) ** 2 +
               2 * (t * flange ** 3 / 12 +
                    flange_area * (flange_center - centroid) ** 2))
        return cls(
            name=name,
            area=area,
            iyy=(width * height ** 3 - flange * (height - 2 * t) ** 3) / 12,
            izz=izz,
            torsion_constant=(height + 2 * flange) * t ** 3 / 3,
            max_fiber_distance_y=max(centroid, width - centroid),
            max_fiber_distance_z=height / 2,
            )


def _check_positive(name, **dims):
    for dim, value in dims.items():
        if not value > 0:
            raise ModelError(
                "Section {!r}: {} must be positive".format(name, dim))


def _check_walls(name, height, width, thickness, walls):
    _check_positive(name, height=height, width=width, thickness=thickness)
    if walls * thickness >= min(height, width):
        raise ModelError(
            "Section {!r}: walls of thickness {} do not fit into "
            "{} x {}".format(name, thickness, height, width))


@dataclass(frozen=True)
class Element:
    id: int
    kind: str
    nodes: tuple
    material: str
    section: str
    orientation_angle: float = 0.0


@dataclass(frozen=True)
class Support:
    """Restrains the dofs of *node* flagged in *fixed*; *prescribed*
    gives their imposed values (zero by default).
    """
    node: int
    fixed: tuple = (True,) * DOFS_PER_NODE
    prescribed: tuple = (0.0,) * DOFS_PER_NODE


@dataclass(frozen=True)
class PointLoad:
    node: int
    force: tuple


@dataclass(frozen=True)
class DistributedLoad:
    """A uniform load per unit length in global coordinates."""
    element: int
    force_per_length: tuple


@dataclass(frozen=True)
class LoadCase:
    name: str
    point_loads: tuple = ()
    distributed_loads: tuple = ()
    gravity: tuple = (0.0, 0.0, 0.0)


class FrameModel:
    """Topology, supports, loads and base properties of a structure.

    Node ids must be ``1..n``; element ids must be unique.  Elements
    refer to materials and sections by name.
    """

    def __init__(self, nodes, elements, materials, sections, supports=(),
                 load_cases=(), name=''):
        self.name = name
        self.nodes = list(nodes)
        self.elements = list(elements)
        self.materials = {m.name: m for m in materials}
        self.sections = {s.name: s for s in sections}
        self.supports = list(supports)
        self.load_cases = list(load_cases) or [LoadCase('default')]
        self._validate()

    def _validate(self):
        ids = [node.id for node in self.nodes]
        if sorted(ids) != list(range(1, len(ids) + 1)):
            raise ModelError(
                "Node ids must be unique and contiguous starting at 1")
        if len(set(ids)) != len(ids) or not ids:
            raise ModelError("A model needs at least one node")
        self.node_index = {node_id: i for i, node_id in enumerate(ids)}

        self.element_index = {}
        for i, elem in enumerate(self.elements):
            if elem.id in self.element_index:
                raise ModelError("Duplicate element id {}".format(elem.id))
            self.element_index[elem.id] = i
            if elem.kind not in ELEMENT_KINDS:
                raise ModelError("Element {}: unknown kind {!r}".format(
                    elem.id, elem.kind))
            if len(elem.nodes) != 2 or elem.nodes[0] == elem.nodes[1]:
                raise ModelError(
                    "Element {} must connect two distinct nodes".format(
                        elem.id))
            for node_id in elem.nodes:
                if node_id not in self.node_index:
                    raise ModelError("Element {}: unknown node {}".format(
                        elem.id, node_id))
            if elem.material not in self.materials:
                raise ModelError("Element {}: unknown material {!r}".format(
                    elem.id, elem.material))
            if elem.section not in self.sections:
                raise ModelError("Element {}: unknown section {!r}".format(
                    elem.id, elem.section))
            section = self.sections[elem.section]
            if elem.kind == 'beam' and not (
                    section.iyy > 0 and section.izz > 0 and
                    section.torsion_constant > 0):
                raise ModelError(
                    "Element {}: beam sections need positive second moments "
                    "and torsion constant".format(elem.id))

        coords = self.coordinates()
        for i, elem in enumerate(self.elements):
            a, b = self.element_nodes[i]
            if np.linalg.norm(coords[b] - coords[a]) <= 0:
                raise ModelError(
                    "Element {} has zero length".format(elem.id))

        for support in self.supports:
            if support.node not in self.node_index:
                raise ModelError(
                    "Support on unknown node {}".format(support.node))
            if (len(support.fixed) != DOFS_PER_NODE or
                    len(support.prescribed) != DOFS_PER_NODE):
                raise ModelError(
                    "Support on node {} needs six entries".format(
                        support.node))
        for case in self.load_cases:
            for load in case.point_loads:
                if load.node not in self.node_index:
                    raise ModelError("Load case {!r}: unknown node {}".format(
                        case.name, load.node))
            for load in case.distributed_loads:
                if load.element not in self.element_index:
                    raise ModelError(
                        "Load case {!r}: unknown element {}".format(
                            case.name, load.element))

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_dofs(self):
        return DOFS_PER_NODE * self.n_nodes

    @property
    def n_load_cases(self):
        return len(self.load_cases)

    @cached_property
    def element_nodes(self):
        """``(n_elements, 2)`` array of node indices."""
        return np.array([
            [self.node_index[n] for n in elem.nodes]
            for elem in self.elements], dtype=int).reshape(-1, 2)

    @cached_property
    def element_dofs(self):
        """Global dof indices of each element, in element dof order."""
        dofs = []
        for elem, (a, b) in zip(self.elements, self.element_nodes):
            per_node = 3 if elem.kind == 'truss' else DOFS_PER_NODE
            dofs.append(np.concatenate([
                DOFS_PER_NODE * a + np.arange(per_node),
                DOFS_PER_NODE * b + np.arange(per_node),
                ]))
        return dofs

    @cached_property
    def node_elements(self):
        """Element indices touching each node."""
        touching = [[] for _ in self.nodes]
        for i, (a, b) in enumerate(self.element_nodes):
            touching[a].append(i)
            touching[b].append(i)
        return touching

    @cached_property
    def _restraints(self):
        fixed = np.zeros(self.n_dofs, dtype=bool)
        prescribed = np.zeros(self.n_dofs)

        # rotations of nodes without beams carry no stiffness
        has_beam = np.zeros(self.n_nodes, dtype=bool)
        for elem, (a, b) in zip(self.elements, self.element_nodes):
            if elem.kind == 'beam':
                has_beam[[a, b]] = True
        for i in np.flatnonzero(~has_beam):
            fixed[DOFS_PER_NODE * i + 3:DOFS_PER_NODE * (i + 1)] = True

        for support in self.supports:
            base = DOFS_PER_NODE * self.node_index[support.node]
            for d in range(DOFS_PER_NODE):
                if support.fixed[d]:
                    fixed[base + d] = True
                    prescribed[base + d] = support.prescribed[d]
        return fixed, prescribed

    @property
    def fixed_dofs(self):
        return np.flatnonzero(self._restraints[0])

    @property
    def free_dofs(self):
        return np.flatnonzero(~self._restraints[0])

    @property
    def prescribed_values(self):
        """Imposed values of the fixed dofs, aligned with
        :attr:`fixed_dofs`.
        """
        fixed, prescribed = self._restraints
        return prescribed[fixed]

    def dof_index(self, node_id, dof):
        if isinstance(dof, str):
            dof = DOF_NAMES.index(dof)
        return DOFS_PER_NODE * self.node_index[node_id] + dof

    def dof_label(self, dof_index):
        node, dof = divmod(int(dof_index), DOFS_PER_NODE)
        return self.nodes[node].id, DOF_NAMES[dof]

    @cached_property
    def point_loads(self):
        """``(n_dofs, n_load_cases)`` nodal loads."""
        loads = np.zeros((self.n_dofs, self.n_load_cases))
        for j, case in enumerate(self.load_cases):
            for load in case.point_loads:
                force = np.zeros(DOFS_PER_NODE)
                force[:len(load.force)] = load.force
                base = DOFS_PER_NODE * self.node_index[load.node]
                loads[base:base + DOFS_PER_NODE, j] += force
        if not np.all(np.isfinite(loads)):
            raise ModelError("Point loads must be finite")
        return loads

    @cached_property
    def distributed_loads(self):
        """Per element, an ``(n_load_cases, 3)`` array of loads per
        unit length, or ``None``.
        """
        loads = [None] * self.n_elements
        for j, case in enumerate(self.load_cases):
            for load in case.distributed_loads:
                i = self.element_index[load.element]
                if loads[i] is None:
                    loads[i] = np.zeros((self.n_load_cases, 3))
                loads[i][j] += load.force_per_length
        return loads

    @cached_property
    def gravity(self):
        """``(n_load_cases, 3)`` gravitational accelerations."""
        return np.array([case.gravity for case in self.load_cases],
                        dtype=float).reshape(-1, 3)

    @cached_property
    def element_groups(self):
        """Per element kind present, the element indices and their
        ``(m, n_element_dofs)`` dof matrix.
        """
        groups = []
        for kind in ELEMENT_KINDS:
            indices = np.array([i for i, elem in enumerate(self.elements)
                                if elem.kind == kind], dtype=int)
            if indices.size:
                dofs = np.array([self.element_dofs[i] for i in indices])
                groups.append((kind, indices, dofs))
        return groups

    @cached_property
    def loaded_elements(self):
        """Indices of the elements that carry distributed loads."""
        return [i for i, loads in enumerate(self.distributed_loads)
                if loads is not None]

    @cached_property
    def _coordinates(self):
        return np.array([node.position for node in self.nodes],
                        dtype=float).reshape(-1, 3)

    @cached_property
    def _property_table(self):
        props = np.zeros((self.n_elements, len(PROPERTIES)))
        for i, elem in enumerate(self.elements):
            values = dict(self.sections[elem.section].attributes())
            values.update(self.materials[elem.material].attributes())
            values['orientation_angle'] = elem.orientation_angle
            props[i] = [values[name] for name in PROPERTIES]
        return props

    def coordinates(self):
        return self._coordinates.copy()

    def property_table(self):
        return self._property_table.copy()

    def configuration(self):
        """The configuration with the model's own base values."""
        return Configuration(self, self.property_table(), self.coordinates())


class Configuration:
    """A :class:`FrameModel` together with concrete values for every
    element property (:attr:`props`, one row per element, columns as
    in :data:`PROPERTIES`) and every nodal coordinate (:attr:`coords`).

    Element frames and matrices are computed once per configuration;
    the arrays must not be modified afterwards.
    """

    def __init__(self, model, props, coords):
        self.model = model
        self.props = props
        self.coords = coords

    def value(self, param):
        table = self.props if param.kind == 'property' else self.coords
        return table[param.index, param.attribute]

    def perturbed(self, param, delta):
        """A copy with *param* shifted by *delta*."""
        props, coords = self.props, self.coords
        if param.kind == 'property':
            props = props.copy()
            props[param.index, param.attribute] += delta
        else:
            coords = coords.copy()
            coords[param.index, param.attribute] += delta
        return Configuration(self.model, props, coords)

    @cached_property
    def _frames(self):
        a, b = self.model.element_nodes.T
        return element_frames(
            self.coords[a], self.coords[b],
            self.props[:, COLUMN['orientation_angle']])

    @property
    def lengths(self):
        return self._frames[0]

    def frame(self, e):
        """Length and local-to-global rotation of element *e*."""
        lengths, rotations = self._frames
        return lengths[e], rotations[e]

    @cached_property
    def _products(self):
        props = self.props
        E = props[:, COLUMN['youngs_modulus']]
        G = E / (2.0 * (1.0 + props[:, COLUMN['poisson_ratio']]))
        return np.column_stack([
            E * props[:, COLUMN['area']], E * props[:, COLUMN['iyy']],
            E * props[:, COLUMN['izz']],
            G * props[:, COLUMN['torsion_constant']]])

    def stiffness_products(self, e):
        """``(EA, EIyy, EIzz, GJ)`` of element *e*."""
        return tuple(self._products[e])

    def element_stiffness(self, e, products=None):
        length, rotation = self.frame(e)
        if products is None:
            products = self.stiffness_products(e)
        return element_stiffness(
            self.model.elements[e].kind, length, rotation, *products)

    @cached_property
    def group_stiffness(self):
        """Global stiffness matrices of every element, one
        ``(m, n, n)`` array per :attr:`FrameModel.element_groups` entry.
        """
        lengths, rotations = self._frames
        return [element_stiffness(kind, lengths[indices], rotations[indices],
                                  *self._products[indices].T)
                for kind, indices, _ in self.model.element_groups]

    @cached_property
    def group_force_maps(self):
        """Matrices that map element dofs to local end forces, one
        ``(m, 12, n)`` array per element group.
        """
        lengths, rotations = self._frames
        return [end_force_maps(kind, lengths[indices], rotations[indices],
                               *self._products[indices].T)
                for kind, indices, _ in self.model.element_groups]

    @cached_property
    def node_masses(self):
        """Lumped translational mass of every node."""
        a, b = self.model.element_nodes.T
        half = (self.props[:, COLUMN['density']] *
                self.props[:, COLUMN['area']] * self.lengths / 2)
        masses = np.zeros(self.model.n_nodes)
        np.add.at(masses, a, half)
        np.add.at(masses, b, half)
        return masses

    def element_lumped_mass(self, e, density=None, area=None):
        """Lumped translational masses on element *e*'s dofs."""
        row = self.props[e]
        density = row[COLUMN['density']] if density is None else density
        area = row[COLUMN['area']] if area is None else area
        length, _ = self.frame(e)
        per_node = len(self.model.element_dofs[e]) // 2
        masses = np.zeros(2 * per_node)
        half = density * area * length / 2
        masses[0:3] = half
        masses[per_node:per_node + 3] = half
        return masses

    def element_gravity_loads(self, e, density=None, area=None):
        """``(n_element_dofs, n_load_cases)`` self-weight loads."""
        masses = self.element_lumped_mass(e, density, area)
        gravity = self.model.gravity
        per_node = masses.size // 2
        loads = np.zeros((masses.size, gravity.shape[0]))
        loads[0:3] = masses[0] * gravity.T
        loads[per_node:per_node + 3] = masses[per_node] * gravity.T
        return loads

    def element_distributed_loads(self, e):
        """Consistent nodal loads of distributed loads on element *e*,
        ``(n_element_dofs, n_load_cases)`` in global coordinates.
        """
        n = len(self.model.element_dofs[e])
        distributed = self.model.distributed_loads[e]
        if distributed is None:
            return np.zeros((n, self.model.n_load_cases))
        length, rotation = self.frame(e)
        if self.model.elements[e].kind == 'truss':
            half = distributed.T * length / 2
            return np.vstack([half, half])
        local = fixed_end_forces(length, distributed @ rotation.T)
        return _beam_transformation(rotation).T @ local

    def element_loads(self, e):
        return self.element_gravity_loads(e) + self.element_distributed_loads(e)

    def nodal_loads(self):
        """``(n_dofs, n_load_cases)`` point, self-weight and
        distributed loads.
        """
        model = self.model
        F = model.point_loads.copy()
        per_node = F.reshape(model.n_nodes, DOFS_PER_NODE, -1)
        per_node[:, :3] += (self.node_masses[:, None, None] *
                            model.gravity.T[None])
        for e in model.loaded_elements:
            F[model.element_dofs[e]] += self.element_distributed_loads(e)
        return F


def element_frames(xa, xb, angles):
    """Lengths and rotation matrices (rows are the local axes) of the
    elements from the rows of *xa* to the rows of *xb*, each rolled by
    its entry of *angles* about its axis.

    The local y axis is perpendicular to the global Z axis; elements
    parallel to Z use the global X axis as reference instead.
    """
    d = np.asarray(xb, dtype=float) - np.asarray(xa, dtype=float)
    lengths = np.linalg.norm(d, axis=1)
    if not np.all(lengths > 0):
        raise ModelError("Element has zero length")
    ex = d / lengths[:, None]
    vertical = np.abs(ex[:, 2]) >= 1.0 - 1e-9
    reference = np.where(vertical[:, None], _X, _Z)
    ey = np.cross(reference, ex)
    ey /= np.linalg.norm(ey, axis=1)[:, None]
    ez = np.cross(ex, ey)
    angles = np.asarray(angles, dtype=float)[:, None]
    c, s = np.cos(angles), np.sin(angles)
    ey, ez = c * ey + s * ez, -s * ey + c * ez
    return lengths, np.stack([ex, ey, ez], axis=1)


def rotation_matrix(xa, xb, angle=0.0):
    """Length and rotation matrix of a single element; see
    :func:`element_frames`.
    """
    lengths, rotations = element_frames(
        np.reshape(xa, (1, 3)), np.reshape(xb, (1, 3)), [angle])
    return lengths[0], rotations[0]


def local_beam_stiffness(length, ea, eiy, eiz, gj):
    """12x12 Euler-Bernoulli beam stiffness in local coordinates.

    Arrays of equal shape give a stack of matrices.
    """
    L, ea, eiy, eiz, gj = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (length, ea, eiy, eiz, gj)))
    k = np.zeros(L.shape + (12, 12))
    k[..., 0, 0] = k[..., 6, 6] = ea / L
    k[..., 0, 6] = -ea / L
    k[..., 3, 3] = k[..., 9, 9] = gj / L
    k[..., 3, 9] = -gj / L

    # bending in the local x-y plane
    k[..., 1, 1] = k[..., 7, 7] = 12 * eiz / L ** 3
    k[..., 1, 7] = -12 * eiz / L ** 3
    k[..., 1, 5] = k[..., 1, 11] = 6 * eiz / L ** 2
    k[..., 5, 7] = k[..., 7, 11] = -6 * eiz / L ** 2
    k[..., 5, 5] = k[..., 11, 11] = 4 * eiz / L
    k[..., 5, 11] = 2 * eiz / L

    # bending in the local x-z plane
    k[..., 2, 2] = k[..., 8, 8] = 12 * eiy / L ** 3
    k[..., 2, 8] = -12 * eiy / L ** 3
    k[..., 2, 4] = k[..., 2, 10] = -6 * eiy / L ** 2
    k[..., 4, 8] = k[..., 8, 10] = 6 * eiy / L ** 2
    k[..., 4, 4] = k[..., 10, 10] = 4 * eiy / L
    k[..., 4, 10] = 2 * eiy / L

    return k + np.swapaxes(np.triu(k, 1), -1, -2)


def fixed_end_forces(length, load):
    """Consistent nodal loads of uniform local loads.

    :param load: ``(n_load_cases, 3)`` local loads per unit length.
    :return: ``(12, n_load_cases)`` local nodal loads.
    """
    L = length
    wx, wy, wz = np.atleast_2d(load).T
    f = np.zeros((12, wx.size))
    f[0] = f[6] = wx * L / 2
    f[1] = f[7] = wy * L / 2
    f[2] = f[8] = wz * L / 2
    f[5] = wy * L ** 2 / 12
    f[11] = -wy * L ** 2 / 12
    f[4] = -wz * L ** 2 / 12
    f[10] = wz * L ** 2 / 12
    return f


def _beam_transformation(rotation):
    rotation = np.asarray(rotation, dtype=float)
    T = np.zeros(rotation.shape[:-2] + (12, 12))
    for i in range(4):
        T[..., 3 * i:3 * i + 3, 3 * i:3 * i + 3] = rotation
    return T


def _truss_strain(length, rotation):
    """Axial elongation per element dof, divided by the length."""
    axis = np.asarray(rotation, dtype=float)[..., 0, :]
    return np.concatenate([-axis, axis], axis=-1) / np.asarray(
        length, dtype=float)[..., None]


def element_stiffness(kind, length, rotation, ea, eiy=0.0, eiz=0.0, gj=0.0):
    """Element stiffness in global coordinates on the element's dofs:
    6x6 for trusses (translations only), 12x12 for beams.

    Arrays of lengths, rotations and products give a stack.
    """
    if kind == 'truss':
        strain = _truss_strain(length, rotation)
        ea_l = np.asarray(ea, dtype=float) * np.asarray(length, dtype=float)
        return ea_l[..., None, None] * (
            strain[..., :, None] * strain[..., None, :])
    T = _beam_transformation(rotation)
    return (np.swapaxes(T, -1, -2) @
            local_beam_stiffness(length, ea, eiy, eiz, gj) @ T)


def end_force_maps(kind, length, rotation, ea, eiy=0.0, eiz=0.0, gj=0.0):
    """Matrices ``R`` with local end forces ``R u`` for element
    displacements ``u``, before subtracting fixed-end forces.

    Local end forces are ordered ``(N, Vy, Vz, T, My, Mz)`` per end.
    """
    if kind == 'truss':
        strain = _truss_strain(length, rotation)
        axial = np.asarray(ea, dtype=float)[..., None] * strain
        R = np.zeros(axial.shape[:-1] + (12, 6))
        R[..., 0, :] = -axial
        R[..., 6, :] = axial
        return R
    return (local_beam_stiffness(length, ea, eiy, eiz, gj) @
            _beam_transformation(rotation))


def assemble(config):
    """Global stiffness matrix and load matrix of *config*.

    :return: ``(K, F)`` with ``K`` of shape ``(n_dofs, n_dofs)`` and
      ``F`` of shape ``(n_dofs, n_load_cases)``.
    """
    model = config.model
    K = np.zeros((model.n_dofs, model.n_dofs))
    for (_, _, dofs), matrices in zip(
            model.element_groups, config.group_stiffness):
        np.add.at(K, (dofs[:, :, None], dofs[:, None, :]), matrices)
    F = config.nodal_loads()
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(F))):
        raise NumericalError("Assembled system contains non-finite values")
    return K, F


@dataclass
class SolutionState:
    """Displacements of all load cases and the factorization of the
    reduced stiffness, reused by adjoint and modal solves.
    """
    config: Configuration
    stiffness: np.ndarray
    loads: np.ndarray
    displacements: np.ndarray
    free: np.ndarray
    factor: tuple = field(repr=False)
    _stresses: dict = field(default_factory=dict, repr=False)

    def displacement(self, node_id, dof, load_case=0):
        return self.displacements[
            self.config.model.dof_index(node_id, dof), load_case]

    def element_stresses(self, load_case=0):
        """Stresses of all elements; see :func:`element_stress`."""
        if load_case not in self._stresses:
            self._stresses[load_case] = element_stresses(
                self.config, self.displacements[:, load_case], load_case)
        return self._stresses[load_case]


def _mechanism(model, reduced, free, reason):
    _, vectors = linalg.eigh(reduced, subset_by_index=[0, 0])
    mode = vectors[:, 0]
    order = np.argsort(-np.abs(mode))[:3]
    modes = [model.dof_label(free[i]) + (float(mode[i]),) for i in order]
    return MechanismError(
        "Structure is a mechanism ({}); dominant dofs of the zero-energy "
        "mode: {}".format(
            reason, ', '.join(
                "node {} {}".format(node, dof) for node, dof, _ in modes)),
        modes=modes,
        )


def factorize(model, reduced, free):
    """Cholesky factorization of the reduced stiffness.

    :raises MechanismError: if the matrix is singular or not positive
      definite.
    """
    try:
        factor = linalg.cho_factor(reduced)
    except linalg.LinAlgError:
        raise _mechanism(model, reduced, free, "not positive definite")
    pivots = np.diag(factor[0]) ** 2
    if pivots.min() <= PIVOT_TOLERANCE * np.abs(np.diag(reduced)).max():
        raise _mechanism(model, reduced, free, "singular")
    return factor


def solve(config, K=None, F=None, residual_tolerance=1e-8):
    """Solves ``K u = f`` for all load cases, honoring prescribed
    displacements.
    """
    model = config.model
    if K is None or F is None:
        K, F = assemble(config)
    free, fixed = model.free_dofs, model.fixed_dofs
    if free.size == 0:
        raise ModelError("Model has no free degrees of freedom")

    U = np.zeros((model.n_dofs, model.n_load_cases))
    U[fixed] = model.prescribed_values[:, None]
    reduced = K[np.ix_(free, free)]
    rhs = F[free] - K[np.ix_(free, fixed)] @ U[fixed]
    factor = factorize(model, reduced, free)
    U[free] = linalg.cho_solve(factor, rhs)

    residual = np.linalg.norm(reduced @ U[free] - rhs)
    if not residual <= residual_tolerance * np.linalg.norm(rhs):
        raise NumericalError(
            "Linear solve residual {:.3g} exceeds tolerance".format(residual))
    return SolutionState(config, K, F, U, free, factor)


def mass(config):
    """Total structural mass ``sum(rho * A * L)``."""
    return float(np.sum(
        config.props[:, COLUMN['density']] *
        config.props[:, COLUMN['area']] * config.lengths))


def strain_energy(state, load_case=0):
    u = state.displacements[:, load_case]
    return 0.5 * float(u @ state.stiffness @ u)


def compliance(state, load_case=0):
    """Work of the applied loads ``f^T u``."""
    return float(state.loads[:, load_case] @ state.displacements[:, load_case])


def _fixed_end(config, e, load_case):
    """Local fixed-end forces of element *e*'s distributed load."""
    distributed = config.model.distributed_loads[e]
    if distributed is None or config.model.elements[e].kind == 'truss':
        return np.zeros(12)
    length, rotation = config.frame(e)
    return fixed_end_forces(
        length, distributed[load_case] @ rotation.T)[:, 0]


def _force_map(config, e):
    length, rotation = config.frame(e)
    return end_force_maps(config.model.elements[e].kind, length, rotation,
                          *config.stiffness_products(e))


def _local_end_forces(config, e, u_element, load_case):
    return (_force_map(config, e) @ u_element -
            _fixed_end(config, e, load_case))


def element_axial_force(config, state, e, load_case=0):
    """Axial force of element *e*, positive in tension."""
    dofs = config.model.element_dofs[e]
    forces = _local_end_forces(
        config, e, state.displacements[dofs, load_case], load_case)
    return float(forces[6])


def element_stress(config, state, e, load_case=0):
    """Largest combined axial and bending stress magnitude over the two
    element ends: ``|N|/A + |My| cz / Iyy + |Mz| cy / Izz``.
    """
    dofs = config.model.element_dofs[e]
    return stress_from_displacements(
        config, e, state.displacements[dofs, load_case], load_case)


def _stress_weights(kind, rows):
    """Per end, the weights of ``|N|``, ``|My|`` and ``|Mz|`` in the
    stress, for property rows *rows*.
    """
    weights = np.zeros(rows.shape[:-1] + (3,))
    weights[..., 0] = 1.0 / rows[..., COLUMN['area']]
    if kind == 'beam':
        weights[..., 1] = (rows[..., COLUMN['max_fiber_distance_z']] /
                           rows[..., COLUMN['iyy']])
        weights[..., 2] = (rows[..., COLUMN['max_fiber_distance_y']] /
                           rows[..., COLUMN['izz']])
    return weights


#: Local end force rows of ``N``, ``My`` and ``Mz`` at either end.
_STRESS_ROWS = np.array([[0, 4, 5], [6, 10, 11]])


def stress_from_displacements(config, e, u_element, load_case=0):
    value, _ = stress_with_gradient(config, e, u_element, load_case)
    return value


def stress_with_gradient(config, e, u_element, load_case=0):
    """Stress of element *e* for element displacements *u_element*,
    and its derivative with respect to them.

    The stress is piecewise linear in the displacements; the gradient
    is the one of the governing end.
    """
    R = _force_map(config, e)
    forces = R @ u_element - _fixed_end(config, e, load_case)
    weights = _stress_weights(
        config.model.elements[e].kind, config.props[e])
    ends = np.abs(forces[_STRESS_ROWS]) @ weights
    end = int(np.argmax(ends))
    rows = _STRESS_ROWS[end]
    gradient = (weights * np.sign(forces[rows])) @ R[rows]
    return float(ends[end]), gradient


def element_stresses(config, u, load_case=0):
    """Stresses of all elements for the full displacement vector *u*."""
    model = config.model
    stresses = np.zeros(model.n_elements)
    for (kind, indices, dofs), R in zip(
            model.element_groups, config.group_force_maps):
        forces = np.einsum('mij,mj->mi', R, u[dofs])
        if kind == 'beam':
            for position in np.flatnonzero(
                    np.isin(indices, model.loaded_elements)):
                forces[position] -= _fixed_end(
                    config, indices[position], load_case)
        weights = _stress_weights(kind, config.props[indices])
        ends = np.einsum(
            'mej,mj->me', np.abs(forces[:, _STRESS_ROWS]), weights)
        stresses[indices] = ends.max(axis=1)
    return stresses


def lumped_mass(config):
    """Diagonal of the lumped mass matrix."""
    diagonal = np.zeros((config.model.n_nodes, DOFS_PER_NODE))
    diagonal[:, :3] = config.node_masses[:, None]
    return diagonal.ravel()


@dataclass
class ModalState:
    """Lowest vibration mode: ``K phi = lambda M phi`` with
    ``phi^T M phi = 1``; *gap* is the relative distance to the next
    eigenvalue.
    """
    eigenvalue: float
    frequency: float
    mode: np.ndarray
    gap: float
    iterations: int

    @property
    def degenerate(self):
        return self.gap < DEGENERACY_TOLERANCE


def smallest_frequency(config, state=None, tolerance=1e-10,
                       max_iterations=1000, block_size=4):
    """Lowest natural frequency by block inverse iteration with
    Rayleigh-Ritz projection.

    Reuses the factorization of *state* when given.  Fixed dofs are
    held at zero.

    :raises NumericalError: if the iteration does not converge.
    """
    if state is None:
        state = solve(config)
    free = state.free
    reduced = state.stiffness[np.ix_(free, free)]
    masses = lumped_mass(config)[free]
    carries_mass = masses > 0
    if not carries_mass.any():
        raise NumericalError("Model has no mass on its free dofs")

    size = min(block_size, int(carries_mass.sum()))
    # deterministic start vectors
    X = np.random.default_rng(0).standard_normal((free.size, size))
    X *= carries_mass[:, None]
    for iteration in range(1, max_iterations + 1):
        Y = linalg.cho_solve(state.factor, masses[:, None] * X)
        k_r = Y.T @ reduced @ Y
        m_r = Y.T @ (masses[:, None] * Y)
        values, vectors = linalg.eigh(
            (k_r + k_r.T) / 2, (m_r + m_r.T) / 2)
        X = Y @ vectors
        phi, eigenvalue = X[:, 0], values[0]
        k_phi = reduced @ phi
        residual = np.linalg.norm(k_phi - eigenvalue * masses * phi)
        if residual <= tolerance * np.linalg.norm(k_phi):
            break
    else:
        raise NumericalError(
            "Modal solve did not converge in {} iterations".format(
                max_iterations))

    mode = np.zeros(config.model.n_dofs)
    mode[free] = phi / np.sqrt(phi @ (masses * phi))
    gap = (values[1] - values[0]) / values[0] if size > 1 else np.inf
    return ModalState(
        eigenvalue=float(eigenvalue),
        frequency=float(np.sqrt(eigenvalue) / (2 * np.pi)),
        mode=mode,
        gap=float(gap),
        iterations=iteration,
        )


@dataclass
class ElementDerivative:
    """Derivatives of one element's stiffness, loads and lumped masses
    with respect to a single parameter, on the element's dofs.
    """
    element: int
    dofs: np.ndarray
    stiffness: np.ndarray
    loads: np.ndarray
    masses: np.ndarray


def _stiffness_products_derivative(config, e, column):
    row = config.props[e]
    E, nu = row[COLUMN['youngs_modulus']], row[COLUMN['poisson_ratio']]
    G = E / (2.0 * (1.0 + nu))
    J = row[COLUMN['torsion_constant']]
    if column == COLUMN['area']:
        return (E, 0.0, 0.0, 0.0)
    if column == COLUMN['iyy']:
        return (0.0, E, 0.0, 0.0)
    if column == COLUMN['izz']:
        return (0.0, 0.0, E, 0.0)
    if column == COLUMN['torsion_constant']:
        return (0.0, 0.0, 0.0, G)
    if column == COLUMN['youngs_modulus']:
        return (row[COLUMN['area']], row[COLUMN['iyy']],
                row[COLUMN['izz']], G / E * J)
    if column == COLUMN['poisson_ratio']:
        return (0.0, 0.0, 0.0, -E / (2.0 * (1.0 + nu) ** 2) * J)
    return None


def _analytic_derivative(config, e, column):
    model = config.model
    dofs = model.element_dofs[e]
    n = dofs.size
    products = _stiffness_products_derivative(config, e, column)
    if products is not None:
        stiffness = config.element_stiffness(e, products)
    else:
        stiffness = np.zeros((n, n))
    loads = np.zeros((n, model.n_load_cases))
    masses = np.zeros(n)
    if column == COLUMN['area']:
        masses = config.element_lumped_mass(e, area=1.0)
        loads = config.element_gravity_loads(e, area=1.0)
    elif column == COLUMN['density']:
        masses = config.element_lumped_mass(e, density=1.0)
        loads = config.element_gravity_loads(e, density=1.0)
    return ElementDerivative(e, dofs, stiffness, loads, masses)


def _finite_difference_derivative(config, e, param):
    h = fd_step(param, config.value(param))
    plus, minus = config.perturbed(param, h), config.perturbed(param, -h)
    return ElementDerivative(
        element=e,
        dofs=config.model.element_dofs[e],
        stiffness=(plus.element_stiffness(e) -
                   minus.element_stiffness(e)) / (2 * h),
        loads=(plus.element_loads(e) - minus.element_loads(e)) / (2 * h),
        masses=(plus.element_lumped_mass(e) -
                minus.element_lumped_mass(e)) / (2 * h),
        )


def touched_elements(config, param):
    """Indices of the elements whose matrices depend on *param*."""
    if param.kind == 'property':
        return [param.index]
    if param.kind == 'coordinate':
        return config.model.node_elements[param.index]
    raise ModelError("Unknown parameter kind {!r}".format(param.kind))


def element_derivatives(config, param):
    """Per-element derivatives of stiffness, loads and lumped masses
    with respect to *param*.

    Section and material properties are differentiated analytically;
    coordinates and orientation angles by central differences of the
    touched elements only.
    """
    if _is_geometric(param):
        return [_finite_difference_derivative(config, e, param)
                for e in touched_elements(config, param)]
    return [_analytic_derivative(config, param.index, param.attribute)]


def stiffness_parameter_derivative(config, param, vector):
    """``(dK/dp) v`` as a full dof vector."""
    result = np.zeros(config.model.n_dofs)
    for deriv in element_derivatives(config, param):
        result[deriv.dofs] += deriv.stiffness @ vector[deriv.dofs]
    return result


def load_parameter_derivative(config, param):
    """``df/dp`` as an ``(n_dofs, n_load_cases)`` matrix."""
    result = np.zeros((config.model.n_dofs, config.model.n_load_cases))
    for deriv in element_derivatives(config, param):
        result[deriv.dofs] += deriv.loads
    return result


def mass_parameter_derivative(config, param):
    """Diagonal of ``dM/dp``."""
    result = np.zeros(config.model.n_dofs)
    for deriv in element_derivatives(config, param):
        result[deriv.dofs] += deriv.masses
    return result
