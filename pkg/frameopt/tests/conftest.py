import numpy as np
import pytest

STEEL = dict(name='steel', youngs_modulus=210e9, poisson_ratio=0.3,
             density=7850.0, yield_stress=360e6)
ALUMINUM = dict(name='aluminum', youngs_modulus=70e9, poisson_ratio=0.33,
                density=2700.0, yield_stress=250e6)


def cantilever(n_elements=4, length=2.0, load=-1000.0, height=0.08,
               width=0.1, density=7850.0):
    """A beam along X clamped at node 1 with a tip load along Z."""
    from frameopt.fem import CrossSection
    from frameopt.fem import Element
    from frameopt.fem import FrameModel
    from frameopt.fem import LoadCase
    from frameopt.fem import Material
    from frameopt.fem import Node
    from frameopt.fem import PointLoad
    from frameopt.fem import Support

    nodes = [Node(i + 1, (length * i / n_elements, 0.0, 0.0))
             for i in range(n_elements + 1)]
    elements = [Element(i + 1, 'beam', (i + 1, i + 2), 'steel', 'rect')
                for i in range(n_elements)]
    return FrameModel(
        nodes=nodes,
        elements=elements,
        materials=[Material(**dict(STEEL, density=density))],
        sections=[CrossSection.rectangle('rect', height, width)],
        supports=[Support(1)],
        load_cases=[LoadCase('tip', point_loads=(
            PointLoad(n_elements + 1, (0.0, 0.0, load)),))],
        )


def two_bar_truss(restrain_out_of_plane=True, load=-10000.0):
    """Two bars from pinned nodes 1 and 2 meeting at node 3, which
    hangs 1 below their midpoint and carries a load along Z.
    """
    from frameopt.fem import CrossSection
    from frameopt.fem import Element
    from frameopt.fem import FrameModel
    from frameopt.fem import LoadCase
    from frameopt.fem import Material
    from frameopt.fem import Node
    from frameopt.fem import PointLoad
    from frameopt.fem import Support

    supports = [Support(1), Support(2)]
    if restrain_out_of_plane:
        supports.append(Support(3, fixed=(False, True, False) + (True,) * 3))
    return FrameModel(
        nodes=[Node(1, (0.0, 0.0, 0.0)), Node(2, (2.0, 0.0, 0.0)),
               Node(3, (1.0, 0.0, -1.0))],
        elements=[Element(1, 'truss', (1, 3), 'steel', 'bar'),
                  Element(2, 'truss', (2, 3), 'steel', 'bar')],
        materials=[Material(**STEEL)],
        sections=[CrossSection('bar', area=1e-3)],
        supports=supports,
        load_cases=[LoadCase('down', point_loads=(
            PointLoad(3, (0.0, 0.0, load)),))],
        )


def frame10_model(seed=0):
    """A one-story space frame with 10 beams: four columns, four top
    beams and two top diagonals.  The top nodes are randomly shifted.
    """
    from frameopt.fem import CrossSection
    from frameopt.fem import DistributedLoad
    from frameopt.fem import Element
    from frameopt.fem import FrameModel
    from frameopt.fem import LoadCase
    from frameopt.fem import Material
    from frameopt.fem import Node
    from frameopt.fem import PointLoad
    from frameopt.fem import Support

    rng = np.random.default_rng(seed)
    base = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.2), (1.0, 1.2)]
    nodes = [Node(i + 1, (x, y, 0.0)) for i, (x, y) in enumerate(base)]
    nodes += [Node(i + 5, tuple(np.array([x, y, 1.0]) +
                                rng.uniform(-0.1, 0.1, 3)))
              for i, (x, y) in enumerate(base)]
    members = [(1, 5), (2, 6), (3, 7), (4, 8),
               (5, 6), (6, 8), (8, 7), (7, 5), (5, 8), (6, 7)]
    elements = [
        Element(i + 1, 'beam', ab, 'steel', 'box' if i < 4 else 'ipe',
                orientation_angle=float(rng.uniform(0, 0.5)))
        for i, ab in enumerate(members)]
    return FrameModel(
        nodes=nodes,
        elements=elements,
        materials=[Material(**STEEL), Material(**ALUMINUM)],
        sections=[
            CrossSection.circle('circle', 0.03),
            CrossSection.box('box', 0.08, 0.06, 0.004),
            CrossSection.i_profile('ipe', 0.1, 0.06, 0.005),
            ],
        supports=[Support(n) for n in (1, 2, 3, 4)],
        load_cases=[LoadCase(
            'service',
            point_loads=(PointLoad(8, (2000.0, 1000.0, -4000.0)),),
            distributed_loads=(DistributedLoad(5, (0.0, 0.0, -500.0)),),
            gravity=(0.0, 0.0, -9.81),
            )],
        name='frame10',
        )


def frame10_space(model):
    from frameopt.design import AttributeMatrix
    from frameopt.design import CategoricalVariable
    from frameopt.design import ContinuousVariable
    from frameopt.design import DesignSpace
    from frameopt.design import LengthBinding
    from frameopt.design import NodeCoordinateBinding
    from frameopt.design import PropertyBinding
    from frameopt.fem import SECTION_ATTRIBUTES

    z8 = model.nodes[7].position[2]
    sections = ['circle', 'box', 'ipe']
    materials = ['steel', 'aluminum']
    material_attributes = ['youngs_modulus', 'poisson_ratio', 'density']
    return DesignSpace(
        continuous=[
            ContinuousVariable(
                'z8', NodeCoordinateBinding([8], 'z'), z8 - 0.2, z8 + 0.2),
            ContinuousVariable(
                'angle5', PropertyBinding([5], 'orientation_angle'),
                0.0, np.pi / 2),
            ContinuousVariable('length10', LengthBinding(10), 1.0, 2.0),
            ],
        categorical=[
            CategoricalVariable(
                'columns', [1, 2, 3, 4],
                AttributeMatrix(SECTION_ATTRIBUTES, [
                    [model.sections[s].attributes()[name] for s in sections]
                    for name in SECTION_ATTRIBUTES]),
                labels=sections),
            CategoricalVariable(
                'top', [5, 6, 7, 8],
                AttributeMatrix(material_attributes, [
                    [model.materials[m].attributes()[name] for m in materials]
                    for name in material_attributes]),
                labels=materials),
            ],
        )


def truss_area_problem(*constraints, objective=None, lower=1e-4,
                       upper=1e-2):
    """The two-bar truss with one area variable shared by both bars;
    compliance is the default objective.
    """
    from frameopt.design import ContinuousVariable
    from frameopt.design import DesignSpace
    from frameopt.design import PropertyBinding
    from frameopt.responses import Compliance
    from frameopt.responses import OptimizationProblem

    space = DesignSpace(continuous=[ContinuousVariable(
        'area', PropertyBinding([1, 2], 'area'), lower, upper)])
    return OptimizationProblem(
        two_bar_truss(), space, objective or Compliance(), constraints)


@pytest.fixture
def frame10():
    """A mixed-variable problem on :func:`frame10_model` whose functions
    are mass, compliance, strain energy, a displacement and two
    stresses.
    """
    from frameopt.responses import Compliance
    from frameopt.responses import Displacement
    from frameopt.responses import Mass
    from frameopt.responses import OptimizationProblem
    from frameopt.responses import StrainEnergy
    from frameopt.responses import Stress

    model = frame10_model()
    return OptimizationProblem(
        model=model,
        space=frame10_space(model),
        objective=Mass(),
        constraints=[
            Compliance(),
            StrainEnergy(),
            Displacement(8, 'uz', 1e-3),
            Stress(1),
            Stress(9),
            ],
        )


@pytest.fixture
def enumerable():
    """A cantilever whose two elements choose among three rectangles of
    increasing depth, minimizing strain energy.
    """
    from frameopt.design import AttributeMatrix
    from frameopt.design import CategoricalVariable
    from frameopt.design import DesignSpace
    from frameopt.fem import CrossSection
    from frameopt.fem import SECTION_ATTRIBUTES
    from frameopt.responses import OptimizationProblem
    from frameopt.responses import StrainEnergy

    model = cantilever(n_elements=2, length=2.0, load=-1000.0)
    sections = [CrossSection.rectangle('s{}'.format(i), h, 0.05)
                for i, h in enumerate([0.04, 0.06, 0.09])]
    matrix = AttributeMatrix(SECTION_ATTRIBUTES, [
        [s.attributes()[name] for s in sections]
        for name in SECTION_ATTRIBUTES])
    space = DesignSpace(categorical=[
        CategoricalVariable('root', [1], matrix),
        CategoricalVariable('tip', [2], matrix),
        ])
    return OptimizationProblem(model, space, StrainEnergy())


@pytest.fixture
def make_cantilever():
    return cantilever


@pytest.fixture
def make_two_bar_truss():
    return two_bar_truss


@pytest.fixture
def make_frame10():
    return frame10_model


@pytest.fixture
def truss_problem():
    return truss_area_problem
