"""Problem documents: reading, validating, building and generating.

A problem document is a JSON object::

    {
      "schema_version": 1,
      "name": "...",
      "nodes": [{"id": 1, "position": [x, y, z]}, ...],
      "materials": [{"name": ..., "youngs_modulus": ..., "poisson_ratio": ...,
                     "density": ..., "yield_stress": ...}, ...],
      "sections": [{"name": ..., "area": ..., ...} or
                   {"name": ..., "shape": "box", "height": ...,
                    "width": ..., "thickness": ...}, ...],
      "elements": [{"id": 1, "kind": "truss" | "beam", "nodes": [a, b],
                    "material": ..., "section": ...,
                    "orientation_angle": 0.0}, ...],
      "supports": [{"node": 1, "fixed": [true, ...] | "all" | "translations",
                    "prescribed": [0.0, ...]}, ...],
      "load_cases": [{"name": ..., "point_loads": [{"node": .., "force": [..]}],
                      "distributed_loads": [{"element": ..,
                                             "force_per_length": [..]}],
                      "gravity": [gx, gy, gz]}, ...],
      "design_space": {
        "continuous": [{"name": ..., "binding": {...}, "lower": ...,
                        "upper": ..., "initial": ...}, ...],
        "categorical": [{"name": ..., "elements": [...],
                         "attributes": ["area", ...],
                         "sections": [...] | "materials": [...] |
                         "choices": [{"label": ..., "values": [...]}]}, ...]
      },
      "objective": {"kind": "mass" | "compliance" | "strain_energy" |
                    "constant", "load_case": 0},
      "constraints": [{"kind": "stress", "elements": "all",
                       "load_cases": [0]},
                      {"kind": "displacement", "nodes": [...], "dofs": [...],
                       "limit": ..., "load_cases": [...]},
                      {"kind": "frequency", "minimum": ...},
                      {"kind": "coordinate_ratio", "nodes": [...],
                       "axes": ["x", "y"], "origin": [x, y, z],
                       "load_case": 0}]
    }

Bindings are ``{"kind": "property", "elements": [...], "attribute": ...}``
(``"section"`` and ``"orientation"`` are accepted as aliases),
``{"kind": "node_coordinate", "nodes": [...], "axis": "z"}`` or
``{"kind": "length", "element": ...}``.
"""

import math

import ujson

from .design import AttributeMatrix
from .design import CategoricalVariable
from .design import ContinuousVariable
from .design import Design
from .design import DesignSpace
from .design import LengthBinding
from .design import NodeCoordinateBinding
from .design import PropertyBinding
from .fem import AXES
from .fem import CrossSection
from .fem import DistributedLoad
from .fem import DOF_NAMES
from .fem import DOFS_PER_NODE
from .fem import Element
from .fem import ELEMENT_KINDS
from .fem import FrameModel
from .fem import LoadCase
from .fem import Material
from .fem import MATERIAL_ATTRIBUTES
from .fem import Node
from .fem import PointLoad
from .fem import PROPERTIES
from .fem import SECTION_ATTRIBUTES
from .fem import solve
from .fem import Support
from .interfaces import DocumentError
from .interfaces import FrameoptError
from .interfaces import MechanismError
from .interfaces import ProblemLoader
from .responses import Compliance
from .responses import Constant
from .responses import CoordinateRatio
from .responses import Displacement
from .responses import Frequency
from .responses import Mass
from .responses import OptimizationProblem
from .responses import StrainEnergy
from .responses import Stress

SCHEMA_VERSION = 1

SECTION_SHAPES = {
    'circle': (CrossSection.circle, ('radius',)),
    'rectangle': (CrossSection.rectangle, ('height', 'width')),
    'box': (CrossSection.box, ('height', 'width', 'thickness')),
    'i_profile': (CrossSection.i_profile, ('height', 'width', 'thickness')),
    'channel': (CrossSection.channel, ('height', 'width', 'thickness')),
    }

OBJECTIVES = {
    'mass': lambda item: Mass(),
    'compliance': lambda item: Compliance(item.get('load_case', 0)),
    'strain_energy': lambda item: StrainEnergy(item.get('load_case', 0)),
    'constant': lambda item: Constant(item.get('value', 0.0)),
    }

BINDING_ALIASES = {
    'property': 'property',
    'section': 'property',
    'orientation': 'property',
    'node_coordinate': 'node_coordinate',
    'length': 'length',
    }

#: Published reference results for the 72-bar truss (mass in lbm).
TRUSS72_REFERENCE_MASSES = {
    'PSO': 393.38,
    'MBO': 390.73,
    'CBO': 389.33,
    'WCO': 389.33,
    'DE': 389.33,
    'NS': 389.33,
    'GA': 389.33,
    'GSMO': 388.01,
    }

#: Areas (in^2) of the 72-bar truss catalog.
TRUSS72_CATALOG = (
    0.111, 0.141, 0.196, 0.250, 0.307, 0.391, 0.442, 0.563, 0.602, 0.766,
    0.785, 0.994, 1.000, 1.228, 1.266, 1.457, 1.563, 1.620, 1.800, 1.990,
    2.130, 2.380, 2.620, 2.630, 2.880, 2.930, 3.090, 3.130, 3.380, 3.470,
    3.550, 3.630, 3.840, 3.870, 3.880, 4.180, 4.220, 4.490, 4.590, 4.800,
    4.970, 5.120, 5.740, 7.220, 7.970, 8.530, 9.300, 10.85, 11.50, 13.50,
    13.90, 14.20, 15.50, 16.00, 16.90, 18.80, 19.90, 22.00, 22.90, 24.50,
    26.50, 28.00, 30.00, 33.50,
    )

#: Published 72-bar designs, areas per member group.
TRUSS72_REFERENCE_DESIGNS = {
    'NS': (0.196, 0.563, 0.391, 0.563, 0.563, 0.563, 0.111, 0.111,
           1.228, 0.563, 0.111, 0.111, 1.990, 0.442, 0.111, 0.111),
    'GA': (0.196, 0.563, 0.391, 0.563, 0.563, 0.563, 0.111, 0.111,
           1.228, 0.442, 0.111, 0.111, 1.990, 0.563, 0.111, 0.111),
    'GSMO': (0.141, 0.563, 0.391, 0.563, 0.563, 0.563, 0.111, 0.111,
             1.228, 0.442, 0.111, 0.111, 1.990, 0.563, 0.111, 0.111),
    }


def _require(doc, key, path, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise DocumentError("missing required key {!r}".format(key), path)
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise DocumentError(
            "{!r} must be of type {}".format(key, _type_name(kind)),
            _join(path, key))
    return value


def _type_name(kind):
    if isinstance(kind, tuple):
        return ' or '.join(k.__name__ for k in kind)
    return kind.__name__


def _join(path, key):
    if isinstance(key, int):
        return "{}[{}]".format(path, key)
    return "{}.{}".format(path, key) if path else key


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError("expected a number", path)
    if not math.isfinite(value):
        raise DocumentError("expected a finite number", path)
    return float(value)


def _vector(value, length, path):
    if not isinstance(value, list) or len(value) != length:
        raise DocumentError("expected a list of {} numbers".format(length),
                            path)
    return tuple(_number(v, _join(path, i)) for i, v in enumerate(value))


def _build_material(doc, path):
    name = _require(doc, 'name', path, str)
    kwargs = {'youngs_modulus': _number(
        _require(doc, 'youngs_modulus', path), _join(path, 'youngs_modulus'))}
    for key in MATERIAL_ATTRIBUTES[1:]:
        if key in doc:
            kwargs[key] = _number(doc[key], _join(path, key))
    return Material(name=name, **kwargs)


def _build_section(doc, path):
    name = _require(doc, 'name', path, str)
    if 'shape' in doc:
        shape = doc['shape']
        if shape not in SECTION_SHAPES:
            raise DocumentError("unknown shape {!r}".format(shape),
                                _join(path, 'shape'))
        factory, dims = SECTION_SHAPES[shape]
        return factory(name, *[
            _number(_require(doc, dim, path), _join(path, dim))
            for dim in dims])
    kwargs = {key: _number(doc[key], _join(path, key))
              for key in SECTION_ATTRIBUTES if key in doc}
    if 'area' not in kwargs:
        raise DocumentError("missing required key 'area'", path)
    return CrossSection(name=name, **kwargs)


def _build_support(doc, path):
    node = _require(doc, 'node', path, int)
    fixed = doc.get('fixed', 'all')
    if fixed == 'all':
        fixed = (True,) * DOFS_PER_NODE
    elif fixed == 'translations':
        fixed = (True,) * 3 + (False,) * 3
    elif (isinstance(fixed, list) and len(fixed) == DOFS_PER_NODE and
          all(isinstance(f, (bool, int)) for f in fixed)):
        fixed = tuple(bool(f) for f in fixed)
    else:
        raise DocumentError(
            "expected 'all', 'translations' or six flags",
            _join(path, 'fixed'))
    prescribed = (0.0,) * DOFS_PER_NODE
    if 'prescribed' in doc:
        prescribed = _vector(doc['prescribed'], DOFS_PER_NODE,
                             _join(path, 'prescribed'))
    return Support(node=node, fixed=fixed, prescribed=prescribed)


def _build_load_case(doc, path):
    point_loads = []
    for i, load in enumerate(doc.get('point_loads', [])):
        load_path = _join(_join(path, 'point_loads'), i)
        force = _require(load, 'force', load_path, list)
        if len(force) not in (3, DOFS_PER_NODE):
            raise DocumentError("expected 3 or 6 components",
                                _join(load_path, 'force'))
        point_loads.append(PointLoad(
            node=_require(load, 'node', load_path, int),
            force=_vector(force, len(force), _join(load_path, 'force'))))
    distributed = []
    for i, load in enumerate(doc.get('distributed_loads', [])):
        load_path = _join(_join(path, 'distributed_loads'), i)
        distributed.append(DistributedLoad(
            element=_require(load, 'element', load_path, int),
            force_per_length=_vector(
                _require(load, 'force_per_length', load_path), 3,
                _join(load_path, 'force_per_length'))))
    gravity = (0.0, 0.0, 0.0)
    if 'gravity' in doc:
        gravity = _vector(doc['gravity'], 3, _join(path, 'gravity'))
    return LoadCase(
        name=doc.get('name', str(path)),
        point_loads=tuple(point_loads),
        distributed_loads=tuple(distributed),
        gravity=gravity,
        )


def build_model(doc):
    """Builds the :class:`~frameopt.fem.FrameModel` of a problem
    document.

    :raises DocumentError:
    """
    nodes = []
    for i, node in enumerate(_require(doc, 'nodes', '', list)):
        path = _join('nodes', i)
        nodes.append(Node(
            id=_require(node, 'id', path, int),
            position=_vector(_require(node, 'position', path), 3,
                             _join(path, 'position'))))

    elements = []
    for i, elem in enumerate(_require(doc, 'elements', '', list)):
        path = _join('elements', i)
        kind = elem.get('kind', 'truss')
        if kind not in ELEMENT_KINDS:
            raise DocumentError("unknown element kind {!r}".format(kind),
                                _join(path, 'kind'))
        ends = _require(elem, 'nodes', path, list)
        if len(ends) != 2:
            raise DocumentError("expected two node ids",
                                _join(path, 'nodes'))
        elements.append(Element(
            id=_require(elem, 'id', path, int),
            kind=kind,
            nodes=tuple(ends),
            material=_require(elem, 'material', path, str),
            section=_require(elem, 'section', path, str),
            orientation_angle=_number(
                elem.get('orientation_angle', 0.0),
                _join(path, 'orientation_angle')),
            ))

    try:
        return FrameModel(
            nodes=nodes,
            elements=elements,
            materials=[
                _build_material(m, _join('materials', i))
                for i, m in enumerate(_require(doc, 'materials', '', list))],
            sections=[
                _build_section(s, _join('sections', i))
                for i, s in enumerate(_require(doc, 'sections', '', list))],
            supports=[
                _build_support(s, _join('supports', i))
                for i, s in enumerate(doc.get('supports', []))],
            load_cases=[
                _build_load_case(lc, _join('load_cases', i))
                for i, lc in enumerate(doc.get('load_cases', []))],
            name=doc.get('name', ''),
            )
    except DocumentError:
        raise
    except FrameoptError as exc:
        raise DocumentError(exc.error_message, 'model')


def _build_binding(doc, path):
    kind = _require(doc, 'kind', path, str)
    if kind not in BINDING_ALIASES:
        raise DocumentError("unknown binding kind {!r}".format(kind),
                            _join(path, 'kind'))
    kind = BINDING_ALIASES[kind]
    if kind == 'property':
        default = 'orientation_angle' if doc['kind'] == 'orientation' else None
        attribute = doc.get('attribute', default)
        if attribute not in PROPERTIES:
            raise DocumentError("unknown attribute {!r}".format(attribute),
                                _join(path, 'attribute'))
        return PropertyBinding(
            _require(doc, 'elements', path, list), attribute)
    if kind == 'node_coordinate':
        axis = _require(doc, 'axis', path, str)
        if axis not in AXES:
            raise DocumentError("unknown axis {!r}".format(axis),
                                _join(path, 'axis'))
        return NodeCoordinateBinding(_require(doc, 'nodes', path, list), axis)
    return LengthBinding(_require(doc, 'element', path, int))


def _attribute_matrix(doc, path, model):
    names = doc.get('attributes')
    if 'sections' in doc:
        catalog = model.sections
        source = 'sections'
        names = names or ['area']
    elif 'materials' in doc:
        catalog = model.materials
        source = 'materials'
        names = names or list(MATERIAL_ATTRIBUTES)
    elif 'choices' in doc:
        choices = _require(doc, 'choices', path, list)
        if names is None:
            raise DocumentError("missing required key 'attributes'", path)
        labels, columns = [], []
        for i, choice in enumerate(choices):
            choice_path = _join(_join(path, 'choices'), i)
            labels.append(str(choice.get('label', i)))
            columns.append(_vector(
                _require(choice, 'values', choice_path), len(names),
                _join(choice_path, 'values')))
        if not columns:
            raise DocumentError("needs at least one choice", path)
        return labels, AttributeMatrix(names, list(zip(*columns)))
    else:
        raise DocumentError(
            "needs 'sections', 'materials' or 'choices'", path)

    labels = _require(doc, source, path, list)
    if not labels:
        raise DocumentError("needs at least one choice", _join(path, source))
    columns = []
    for i, label in enumerate(labels):
        if label not in catalog:
            raise DocumentError("unknown {} {!r}".format(source[:-1], label),
                                _join(_join(path, source), i))
        values = catalog[label].attributes()
        missing = [name for name in names if name not in values]
        if missing:
            raise DocumentError(
                "attributes {} are not {} attributes".format(
                    missing, source[:-1]), _join(path, 'attributes'))
        columns.append([values[name] for name in names])
    return labels, AttributeMatrix(names, list(zip(*columns)))


def build_space(doc, model):
    """Builds the :class:`~frameopt.design.DesignSpace` of a problem
    document.
    """
    space_doc = doc.get('design_space', {})
    continuous = []
    for i, var in enumerate(space_doc.get('continuous', [])):
        path = _join('design_space.continuous', i)
        lower = _number(_require(var, 'lower', path), _join(path, 'lower'))
        upper = _number(_require(var, 'upper', path), _join(path, 'upper'))
        if lower > upper:
            raise DocumentError("lower bound exceeds upper bound", path)
        initial = var.get('initial')
        continuous.append(ContinuousVariable(
            name=_require(var, 'name', path, str),
            binding=_build_binding(
                _require(var, 'binding', path, dict), _join(path, 'binding')),
            lower=lower,
            upper=upper,
            initial=None if initial is None else _number(
                initial, _join(path, 'initial')),
            ))

    categorical = []
    for i, var in enumerate(space_doc.get('categorical', [])):
        path = _join('design_space.categorical', i)
        labels, attributes = _attribute_matrix(var, path, model)
        categorical.append(CategoricalVariable(
            name=_require(var, 'name', path, str),
            elements=_require(var, 'elements', path, list),
            attributes=attributes,
            labels=labels,
            ))
    return DesignSpace(continuous, categorical)


def _load_cases(item, model, path):
    cases = item.get('load_cases', list(range(model.n_load_cases)))
    for i, case in enumerate(cases):
        if not isinstance(case, int) or not 0 <= case < model.n_load_cases:
            raise DocumentError("unknown load case {!r}".format(case),
                                _join(_join(path, 'load_cases'), i))
    return cases


def build_constraints(doc, model):
    constraints = []
    for i, item in enumerate(doc.get('constraints', [])):
        path = _join('constraints', i)
        kind = _require(item, 'kind', path, str)
        if kind == 'stress':
            elements = item.get('elements', 'all')
            if elements == 'all':
                elements = [elem.id for elem in model.elements]
            for case in _load_cases(item, model, path):
                constraints.extend(Stress(e, case) for e in elements)
        elif kind == 'displacement':
            limit = _number(_require(item, 'limit', path), _join(path, 'limit'))
            dofs = item.get('dofs', list(DOF_NAMES[:3]))
            for dof in dofs:
                if dof not in DOF_NAMES:
                    raise DocumentError("unknown dof {!r}".format(dof),
                                        _join(path, 'dofs'))
            for case in _load_cases(item, model, path):
                for node in _require(item, 'nodes', path, list):
                    constraints.extend(
                        Displacement(node, dof, limit, case) for dof in dofs)
        elif kind == 'frequency':
            constraints.append(Frequency(_number(
                _require(item, 'minimum', path), _join(path, 'minimum'))))
        elif kind == 'coordinate_ratio':
            origin = _vector(item.get('origin', [0.0, 0.0, 0.0]), 3,
                             _join(path, 'origin'))
            axes = item.get('axes', ['x', 'y'])
            case = item.get('load_case', 0)
            for node in _require(item, 'nodes', path, list):
                for axis in axes:
                    if axis not in AXES:
                        raise DocumentError("unknown axis {!r}".format(axis),
                                            _join(path, 'axes'))
                    constraints.append(CoordinateRatio(
                        node, AXES.index(axis), origin[AXES.index(axis)],
                        case))
        else:
            raise DocumentError("unknown constraint kind {!r}".format(kind),
                                _join(path, 'kind'))
    return constraints


def build_problem(doc):
    """Validates *doc* and builds its
    :class:`~frameopt.responses.OptimizationProblem`.

    :raises DocumentError: with the path of the first offending entry.
    """
    if not isinstance(doc, dict):
        raise DocumentError("a problem document must be an object")
    version = _require(doc, 'schema_version', '', int)
    if version != SCHEMA_VERSION:
        raise DocumentError(
            "unsupported schema version {}".format(version), 'schema_version')

    model = build_model(doc)
    objective_doc = doc.get('objective', {'kind': 'mass'})
    kind = _require(objective_doc, 'kind', 'objective', str)
    if kind not in OBJECTIVES:
        raise DocumentError("unknown objective {!r}".format(kind),
                            'objective.kind')
    try:
        return OptimizationProblem(
            model=model,
            space=build_space(doc, model),
            objective=OBJECTIVES[kind](objective_doc),
            constraints=build_constraints(doc, model),
            name=doc.get('name', ''),
            )
    except DocumentError:
        raise
    except FrameoptError as exc:
        raise DocumentError(exc.error_message)


def validate_document(doc):
    """Raises :class:`DocumentError` unless *doc* builds into a problem
    whose variables and responses are all consistent, and whose
    initial design, with the first choice of every categorical
    variable, is not a mechanism.
    """
    problem = build_problem(doc)
    space = problem.space
    config = space.configure(
        problem.model, space.initial_x(problem.model),
        choices=[0] * space.n_categorical)
    try:
        solve(config)
    except MechanismError as exc:
        raise DocumentError(exc.error_message, 'supports')
    return doc


def load_document(path):
    with open(path) as f:
        try:
            doc = ujson.load(f)
        except ValueError as exc:
            raise DocumentError("invalid JSON: {}".format(exc), path)
    return doc


def dump_document(doc, path):
    with open(path, 'w') as f:
        f.write(ujson.dumps(doc, indent=2, sort_keys=True))


def design_to_document(problem, design):
    """A JSON-ready description of *design*."""
    space = problem.space
    categorical = {}
    for m, var in enumerate(space.categorical):
        choice = int(design.choices[m])
        entry = {'index': choice, 'label': var.labels[choice]}
        if design.probabilities is not None:
            entry['probability'] = float(design.probabilities[m][choice])
        categorical[var.name] = entry
    return {
        'schema_version': SCHEMA_VERSION,
        'problem': problem.name,
        'continuous': {
            var.name: float(value)
            for var, value in zip(space.continuous, design.x)},
        'categorical': categorical,
        }


def design_from_document(problem, doc):
    """Reads and validates a design document written by
    :func:`design_to_document`.
    """
    space = problem.space
    continuous = _require(doc, 'continuous', '', dict)
    categorical = _require(doc, 'categorical', '', dict)
    x = []
    for var in space.continuous:
        path = _join('continuous', var.name)
        value = _number(_require(continuous, var.name, 'continuous'), path)
        if not var.lower <= value <= var.upper:
            raise DocumentError("value outside of bounds", path)
        x.append(value)
    choices = []
    for var in space.categorical:
        path = _join('categorical', var.name)
        entry = _require(categorical, var.name, 'categorical', dict)
        index = _require(entry, 'index', path, int)
        if not 0 <= index < var.n_choices:
            raise DocumentError("choice index out of range", path)
        if 'label' in entry and entry['label'] != var.labels[index]:
            raise DocumentError("label does not match index", path)
        choices.append(index)
    return Design(x=x, choices=choices,
                  labels=[var.labels[c]
                          for var, c in zip(space.categorical, choices)])


def generate_truss72():
    """The four-story, 72-bar space truss with 16 member groups sized
    from a 64-entry catalog (units: in, lbf, lbm).
    """
    corners = [(0.0, 0.0), (120.0, 0.0), (120.0, 120.0), (0.0, 120.0)]
    nodes = [
        {'id': 4 * level + i + 1, 'position': [x, y, 240.0 - 60.0 * level]}
        for level in range(5) for i, (x, y) in enumerate(corners)]

    story_members = [
        [(1, 5), (2, 6), (3, 7), (4, 8)],
        [(1, 6), (2, 5), (2, 7), (3, 6), (3, 8), (4, 7), (4, 5), (1, 8)],
        [(1, 2), (2, 3), (3, 4), (4, 1)],
        [(1, 3), (2, 4)],
        ]
    elements, groups = [], []
    for story in range(4):
        for members in story_members:
            group = []
            for a, b in members:
                element_id = len(elements) + 1
                elements.append({
                    'id': element_id,
                    'kind': 'truss',
                    'nodes': [a + 4 * story, b + 4 * story],
                    'material': 'aluminum',
                    'section': 'A01',
                    })
                group.append(element_id)
            groups.append(group)

    sections = [{'name': 'A{:02d}'.format(i + 1), 'area': area}
                for i, area in enumerate(TRUSS72_CATALOG)]
    return {
        'schema_version': SCHEMA_VERSION,
        'name': 'truss72',
        'units': {'length': 'in', 'force': 'lbf', 'mass': 'lbm'},
        'nodes': nodes,
        'materials': [{
            'name': 'aluminum', 'youngs_modulus': 1e7, 'poisson_ratio': 0.3,
            'density': 0.1, 'yield_stress': 25000.0}],
        'sections': sections,
        'elements': elements,
        'supports': [{'node': n, 'fixed': 'all'} for n in (17, 18, 19, 20)],
        'load_cases': [
            {'name': 'lateral',
             'point_loads': [{'node': 1, 'force': [5000.0, 5000.0, -5000.0]}]},
            {'name': 'vertical',
             'point_loads': [{'node': n, 'force': [0.0, 0.0, -5000.0]}
                             for n in (1, 2, 3, 4)]},
            ],
        'design_space': {'categorical': [
            {'name': 'group{:02d}'.format(g + 1),
             'elements': members,
             'attributes': ['area'],
             'sections': [s['name'] for s in sections]}
            for g, members in enumerate(groups)]},
        'objective': {'kind': 'mass'},
        'constraints': [
            {'kind': 'stress', 'elements': 'all'},
            {'kind': 'displacement', 'nodes': [1, 2, 3, 4],
             'dofs': ['ux', 'uy'], 'limit': 0.25},
            ],
        }


def truss72_choices(areas):
    """Catalog indices of a published 72-bar design given by its group
    areas.
    """
    return [TRUSS72_CATALOG.index(area) for area in areas]


STEEL = {
    'name': 'steel', 'youngs_modulus': 210e9, 'poisson_ratio': 0.3,
    'density': 7850.0, 'yield_stress': 360e6,
    }

BRIDGE_SECTIONS = [
    {'name': 'circle', 'shape': 'circle', 'radius': 0.040},
    {'name': 'rectangle', 'shape': 'rectangle', 'height': 0.080,
     'width': 0.100},
    {'name': 'box', 'shape': 'box', 'height': 0.125, 'width': 0.075,
     'thickness': 0.005},
    {'name': 'i_profile', 'shape': 'i_profile', 'height': 0.200,
     'width': 0.150, 'thickness': 0.010},
    {'name': 'channel', 'shape': 'channel', 'height': 0.150, 'width': 0.080,
     'thickness': 0.007},
    ]

LATTICE_SECTIONS = [
    {'name': 'circle', 'shape': 'circle', 'radius': 0.010},
    {'name': 'rectangle', 'shape': 'rectangle', 'height': 0.020,
     'width': 0.015},
    {'name': 'box', 'shape': 'box', 'height': 0.030, 'width': 0.020,
     'thickness': 0.002},
    {'name': 'i_profile', 'shape': 'i_profile', 'height': 0.030,
     'width': 0.025, 'thickness': 0.003},
    ]


def generate_bridge(panels=4, panel_length=1.75, width=1.0, height=1.5,
                    floor_load=1000.0, min_frequency=50.0):
    """A steel Pratt truss bridge made of beams (SI units).

    Two planar trusses are joined by floor beams and top struts.  The
    four end nodes of the deck are clamped.  The deck carries a uniform
    downward load in addition to self-weight.  Each member chooses one
    of five profiles and its orientation.  The lengths of the verticals
    are continuous and place the top chord nodes.
    """
    if panels < 2:
        raise DocumentError("a bridge needs at least two panels", 'panels')
    span = panels * panel_length
    positions = [
        (0.0, 0.0, 0.0), (0.0, width, 0.0),
        (span, 0.0, 0.0), (span, width, 0.0)]
    bottom = {(0, 0): 1, (0, 1): 2, (panels, 0): 3, (panels, 1): 4}
    for i in range(1, panels):
        for side in (0, 1):
            positions.append((i * panel_length, side * width, 0.0))
            bottom[i, side] = len(positions)
    top = {}
    for i in range(1, panels):
        for side in (0, 1):
            positions.append((i * panel_length, side * width, height))
            top[i, side] = len(positions)

    members, deck, verticals = [], [], []

    def add(a, b, on_deck=False):
        members.append((a, b))
        if on_deck:
            deck.append(len(members))

    for side in (0, 1):
        for i in range(panels):
            add(bottom[i, side], bottom[i + 1, side], on_deck=True)
        for i in range(1, panels - 1):
            add(top[i, side], top[i + 1, side])
        for i in range(1, panels):
            add(bottom[i, side], top[i, side])
            verticals.append(len(members))
        add(bottom[0, side], top[1, side])
        add(top[panels - 1, side], bottom[panels, side])
        for i in range(1, panels - 1):
            if 2 * i < panels:
                add(top[i, side], bottom[i + 1, side])
            else:
                add(bottom[i, side], top[i + 1, side])
    for i in range(panels + 1):
        add(bottom[i, 0], bottom[i, 1], on_deck=True)
    for i in range(1, panels):
        add(top[i, 0], top[i, 1])

    elements = [
        {'id': k + 1, 'kind': 'beam', 'nodes': [a, b], 'material': 'steel',
         'section': 'box', 'orientation_angle': 0.0}
        for k, (a, b) in enumerate(members)]
    continuous = [
        {'name': 'orientation{:03d}'.format(elem['id']),
         'binding': {'kind': 'orientation', 'elements': [elem['id']]},
         'lower': 0.0, 'upper': math.pi / 2, 'initial': 0.0}
        for elem in elements]
    continuous += [
        {'name': 'length{:03d}'.format(e),
         'binding': {'kind': 'length', 'element': e},
         'lower': 0.5 * height, 'upper': 1.5 * height, 'initial': height}
        for e in verticals]
    categorical = [
        {'name': 'profile{:03d}'.format(elem['id']),
         'elements': [elem['id']],
         'attributes': list(SECTION_ATTRIBUTES),
         'sections': [s['name'] for s in BRIDGE_SECTIONS]}
        for elem in elements]

    return {
        'schema_version': SCHEMA_VERSION,
        'name': 'bridge{}'.format(panels),
        'units': {'length': 'm', 'force': 'N', 'mass': 'kg'},
        'nodes': [{'id': i + 1, 'position': list(p)}
                  for i, p in enumerate(positions)],
        'materials': [dict(STEEL)],
        'sections': [dict(s) for s in BRIDGE_SECTIONS],
        'elements': elements,
        'supports': [{'node': n, 'fixed': 'all'} for n in (1, 2, 3, 4)],
        'load_cases': [{
            'name': 'floor',
            'distributed_loads': [
                {'element': e, 'force_per_length': [0.0, 0.0, -floor_load]}
                for e in deck],
            'gravity': [0.0, 0.0, -9.81],
            }],
        'design_space': {'continuous': continuous,
                         'categorical': categorical},
        'objective': {'kind': 'strain_energy'},
        'constraints': [
            {'kind': 'stress', 'elements': 'all'},
            {'kind': 'frequency', 'minimum': min_frequency},
            ],
        }


def generate_lattice(cells=(2, 2, 2), edge=0.5, stretch=0.2):
    """A cubic beam lattice with face diagonals, stretched along Z by a
    prescribed displacement of its top face (SI units).

    Members form four groups (along X, Y, Z and diagonal) choosing
    among four profiles, and every member has its own orientation
    angle.  Nodes between the top and bottom faces may move: interior
    ones along all axes, those on the side faces along X and Y.  The
    objective is constant; the constraints ask the outer nodes of the
    middle layer not to move inward.
    """
    cx, cy, cz = cells
    if min(cells) < 1:
        raise DocumentError("a lattice needs at least one cell per axis",
                            'cells')

    def node_id(i, j, k):
        return 1 + i + (cx + 1) * (j + (cy + 1) * k)

    nodes = [
        {'id': node_id(i, j, k), 'position': [i * edge, j * edge, k * edge]}
        for k in range(cz + 1) for j in range(cy + 1) for i in range(cx + 1)]

    groups = {'x': [], 'y': [], 'z': [], 'diagonal': []}
    members = []

    def add(group, a, b):
        members.append((a, b))
        groups[group].append(len(members))

    for k in range(cz + 1):
        for j in range(cy + 1):
            for i in range(cx + 1):
                if i < cx:
                    add('x', node_id(i, j, k), node_id(i + 1, j, k))
                if j < cy:
                    add('y', node_id(i, j, k), node_id(i, j + 1, k))
                if k < cz:
                    add('z', node_id(i, j, k), node_id(i, j, k + 1))
                if i < cx and j < cy:
                    add('diagonal', node_id(i, j, k), node_id(i + 1, j + 1, k))
                    add('diagonal', node_id(i + 1, j, k), node_id(i, j + 1, k))
                if i < cx and k < cz:
                    add('diagonal', node_id(i, j, k), node_id(i + 1, j, k + 1))
                    add('diagonal', node_id(i + 1, j, k), node_id(i, j, k + 1))
                if j < cy and k < cz:
                    add('diagonal', node_id(i, j, k), node_id(i, j + 1, k + 1))
                    add('diagonal', node_id(i, j + 1, k), node_id(i, j, k + 1))

    elements = [
        {'id': n + 1, 'kind': 'beam', 'nodes': [a, b], 'material': 'steel',
         'section': 'circle'}
        for n, (a, b) in enumerate(members)]

    supports = []
    for j in range(cy + 1):
        for i in range(cx + 1):
            fixed = [False, False, True, False, False, False]
            if (i, j) == (0, 0):
                fixed[0] = fixed[1] = True
            elif (i, j) == (cx, 0):
                fixed[1] = True
            supports.append({'node': node_id(i, j, 0), 'fixed': fixed})
            supports.append({
                'node': node_id(i, j, cz),
                'fixed': [False, False, True, False, False, False],
                'prescribed': [0.0, 0.0, stretch, 0.0, 0.0, 0.0]})

    continuous = []
    for k in range(1, cz):
        for j in range(cy + 1):
            for i in range(cx + 1):
                base = (i * edge, j * edge, k * edge)
                axes = 3 if 0 < i < cx and 0 < j < cy else 2
                for axis in range(axes):
                    continuous.append({
                        'name': 'node{}_{}'.format(
                            node_id(i, j, k), AXES[axis]),
                        'binding': {'kind': 'node_coordinate',
                                    'nodes': [node_id(i, j, k)],
                                    'axis': AXES[axis]},
                        'lower': base[axis] - 0.25 * edge,
                        'upper': base[axis] + 0.25 * edge,
                        'initial': base[axis]})
    continuous += [
        {'name': 'orientation{:03d}'.format(elem['id']),
         'binding': {'kind': 'orientation', 'elements': [elem['id']]},
         'lower': 0.0, 'upper': math.pi / 2, 'initial': 0.0}
        for elem in elements]

    categorical = [
        {'name': 'profile_{}'.format(group),
         'elements': ids,
         'attributes': list(SECTION_ATTRIBUTES),
         'sections': [s['name'] for s in LATTICE_SECTIONS]}
        for group, ids in groups.items()]

    middle = (cz + 1) // 2
    center = (cx * edge / 2, cy * edge / 2, middle * edge)
    constraints = []
    for j in range(cy + 1):
        for i in range(cx + 1):
            if 0 < i < cx and 0 < j < cy:
                continue
            axes = [axis for axis, offset in (
                ('x', i * edge - center[0]), ('y', j * edge - center[1]))
                if offset != 0]
            constraints.append({
                'kind': 'coordinate_ratio', 'nodes': [node_id(i, j, middle)],
                'axes': axes, 'origin': list(center), 'load_case': 0})

    return {
        'schema_version': SCHEMA_VERSION,
        'name': 'lattice{}x{}x{}'.format(cx, cy, cz),
        'units': {'length': 'm', 'force': 'N', 'mass': 'kg'},
        'nodes': nodes,
        'materials': [dict(STEEL)],
        'sections': [dict(s) for s in LATTICE_SECTIONS],
        'elements': elements,
        'supports': supports,
        'load_cases': [{'name': 'stretch'}],
        'design_space': {'continuous': continuous,
                         'categorical': categorical},
        'objective': {'kind': 'constant'},
        'constraints': constraints,
        }


class FileProblem(ProblemLoader):
    """Reads a problem document from a JSON file."""

    def __init__(self, path):
        self.path = path

    def __call__(self):
        return load_document(self.path)


class Truss72(ProblemLoader):
    def __call__(self):
        return generate_truss72()


class Lattice(ProblemLoader):
    def __init__(self, cells=(2, 2, 2), edge=0.5, stretch=0.2):
        self.cells = tuple(cells)
        self.edge = edge
        self.stretch = stretch

    def __call__(self):
        return generate_lattice(self.cells, self.edge, self.stretch)


class Bridge(ProblemLoader):
    def __init__(self, panels=4, **kwargs):
        self.panels = panels
        self.kwargs = kwargs

    def __call__(self):
        return generate_bridge(self.panels, **self.kwargs)


def problem_loader(name):
    """The :class:`~frameopt.interfaces.ProblemLoader` for a problem
    string: a JSON file path, ``builtin:truss72``,
    ``builtin:lattice:X,Y,Z`` or ``builtin:bridge:P``.
    """
    if not name.startswith('builtin:'):
        return FileProblem(name)
    kind, _, args = name[len('builtin:'):].partition(':')
    try:
        if kind == 'truss72' and not args:
            return Truss72()
        if kind == 'lattice':
            cells = tuple(int(v) for v in args.split(',')) if args \
                else (2, 2, 2)
            if len(cells) != 3:
                raise ValueError(args)
            return Lattice(cells)
        if kind == 'bridge':
            return Bridge(int(args) if args else 4)
    except ValueError:
        raise DocumentError("malformed arguments {!r}".format(args), name)
    raise DocumentError("unknown builtin problem {!r}".format(kind), name)


def resolve_document(problem):
    """The problem document for a problem string, a
    :class:`~frameopt.interfaces.ProblemLoader` or a document.
    """
    if isinstance(problem, str):
        problem = problem_loader(problem)
    if isinstance(problem, ProblemLoader):
        problem = problem()
    return problem


def resolve_problem(problem):
    """Builds the :class:`~frameopt.responses.OptimizationProblem` for a
    problem string, a :class:`~frameopt.interfaces.ProblemLoader` or a
    problem document.
    """
    return build_problem(resolve_document(problem))
