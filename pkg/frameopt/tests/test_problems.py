from copy import deepcopy

import numpy as np
import pytest
import ujson


@pytest.fixture
def truss72_doc():
    from frameopt.problems import generate_truss72
    return generate_truss72()


@pytest.fixture
def truss72(truss72_doc):
    from frameopt.problems import build_problem
    return build_problem(truss72_doc)


class TestTruss72:
    def test_catalog(self):
        from frameopt.problems import TRUSS72_CATALOG
        assert len(TRUSS72_CATALOG) == 64
        assert min(TRUSS72_CATALOG) == 0.111
        assert max(TRUSS72_CATALOG) == 33.5
        assert list(TRUSS72_CATALOG) == sorted(TRUSS72_CATALOG)

    def test_structure(self, truss72):
        model, space = truss72.model, truss72.space
        assert model.n_nodes == 20
        assert model.n_elements == 72
        assert model.n_load_cases == 2
        assert space.n_continuous == 0
        assert space.n_categorical == 16
        members = sorted(e for var in space.categorical for e in var.elements)
        assert members == list(range(1, 73))
        assert [var.n_choices for var in space.categorical] == [64] * 16
        # stresses of 72 bars and 8 drifts, per load case
        assert len(truss72.constraints) == 2 * (72 + 8)

    @pytest.mark.parametrize('name', ['NS', 'GA', 'GSMO'])
    def test_reference_masses(self, truss72, name):
        from frameopt.problems import TRUSS72_REFERENCE_DESIGNS
        from frameopt.problems import TRUSS72_REFERENCE_MASSES
        from frameopt.problems import truss72_choices

        choices = truss72_choices(TRUSS72_REFERENCE_DESIGNS[name])
        evaluation = truss72.evaluate([], choices=choices)
        assert evaluation.objective == pytest.approx(
            TRUSS72_REFERENCE_MASSES[name], rel=5e-3)

    @pytest.mark.parametrize('name', ['NS', 'GA'])
    def test_reference_design_feasible(self, truss72, name):
        from frameopt.optimizer import FEASIBILITY_TOLERANCE
        from frameopt.problems import TRUSS72_REFERENCE_DESIGNS
        from frameopt.problems import truss72_choices

        choices = truss72_choices(TRUSS72_REFERENCE_DESIGNS[name])
        evaluation = truss72.evaluate([], choices=choices)
        assert evaluation.max_violation <= FEASIBILITY_TOLERANCE

    def test_lateral_load_points_down(self, truss72_doc):
        lateral = truss72_doc['load_cases'][0]
        assert lateral['point_loads'] == [
            {'node': 1, 'force': [5000.0, 5000.0, -5000.0]}]

    def test_smallest_areas_violate(self, truss72):
        evaluation = truss72.evaluate([], choices=[0] * 16)
        assert evaluation.max_violation > 1.0

    def test_deterministic(self, truss72_doc):
        from frameopt.problems import generate_truss72
        assert ujson.dumps(generate_truss72(), sort_keys=True) == ujson.dumps(
            truss72_doc, sort_keys=True)


class TestLattice:
    def test_single_cell(self):
        from frameopt.problems import build_problem
        from frameopt.problems import generate_lattice

        problem = build_problem(generate_lattice((1, 1, 1)))
        assert problem.model.n_nodes == 8
        assert len(problem.constraints) == 8
        assert problem.model.n_elements == 24
        assert problem.space.n_continuous == 24
        assert problem.space.n_categorical == 4
        evaluation = problem.evaluate(
            problem.space.initial_x(problem.model), choices=[0] * 4)
        assert evaluation.objective == 0.0
        assert np.all(np.isfinite(evaluation.constraints))
        # the top face is pulled up by the prescribed stretch
        assert evaluation.state.displacement(8, 'uz') == 0.2

    def test_two_cells(self):
        from frameopt.problems import build_problem
        from frameopt.problems import generate_lattice

        problem = build_problem(generate_lattice((2, 2, 2)))
        assert problem.model.n_nodes == 27
        assert problem.model.n_elements == 126
        # eight side-face nodes move along X and Y, the center node along
        # all axes, and every member has an orientation
        assert problem.space.n_continuous == 8 * 2 + 3 + 126
        assert problem.space.n_variables == 149
        assert len(problem.constraints) == 12
        names = [var.name for var in problem.space.continuous]
        assert names[:2] == ['node10_x', 'node10_y']
        assert {'node14_x', 'node14_y', 'node14_z'} <= set(names)
        assert 'node10_z' not in names
        assert names[-1] == 'orientation126'

    def test_needs_cells(self):
        from frameopt.interfaces import DocumentError
        from frameopt.problems import generate_lattice
        with pytest.raises(DocumentError):
            generate_lattice((0, 1, 1))


class TestBridge:
    def test_builds_and_solves(self):
        from frameopt.problems import build_problem
        from frameopt.problems import generate_bridge

        problem = build_problem(generate_bridge(panels=4))
        model, space = problem.model, problem.space
        assert model.n_nodes == 16
        assert model.n_elements == 34
        assert space.n_categorical == 34
        assert space.n_continuous == 34 + 6
        assert problem.needs_modal
        assert len(problem.constraints) == 34 + 1

        evaluation = problem.evaluate(
            space.initial_x(model), choices=[2] * 34)
        assert evaluation.objective > 0
        assert evaluation.modal.frequency > 0
        assert np.all(np.isfinite(evaluation.constraints))

    def test_two_panels(self):
        from frameopt.problems import build_problem
        from frameopt.problems import generate_bridge
        problem = build_problem(generate_bridge(panels=2))
        assert problem.model.n_elements == 14

    def test_vertical_lengths_set_heights(self):
        from frameopt.design import LengthBinding
        from frameopt.problems import build_problem
        from frameopt.problems import generate_bridge

        problem = build_problem(generate_bridge(panels=4, height=1.5))
        model, space = problem.model, problem.space
        lengths = [var for var in space.continuous
                   if isinstance(var.binding, LengthBinding)]
        assert len(lengths) == 6
        x = space.initial_x(model)
        assert np.allclose(x[-6:], 1.5)
        x[-6:] = 1.2
        config = space.configure(model, x, choices=[0] * 34)
        top = config.coords[model.n_nodes - 6:]
        assert np.allclose(top[:, 2], 1.2)

    def test_needs_two_panels(self):
        from frameopt.interfaces import DocumentError
        from frameopt.problems import generate_bridge
        with pytest.raises(DocumentError):
            generate_bridge(panels=1)


class TestValidateDocument:
    def _error(self, doc):
        from frameopt.interfaces import DocumentError
        from frameopt.problems import validate_document
        with pytest.raises(DocumentError) as exc:
            validate_document(doc)
        return exc.value

    def test_valid(self, truss72_doc):
        from frameopt.problems import validate_document
        assert validate_document(truss72_doc) is truss72_doc

    def test_not_an_object(self):
        assert self._error([]).path == ''

    def test_schema_version(self, truss72_doc):
        doc = dict(truss72_doc, schema_version=2)
        error = self._error(doc)
        assert error.path == 'schema_version'
        assert error.error_code == 50

    def test_missing_key(self, truss72_doc):
        doc = dict(truss72_doc)
        del doc['nodes']
        assert "'nodes'" in str(self._error(doc))

    def test_element_kind(self, truss72_doc):
        doc = deepcopy(truss72_doc)
        doc['elements'][3]['kind'] = 'cable'
        assert self._error(doc).path == 'elements[3].kind'

    def test_node_position(self, truss72_doc):
        doc = deepcopy(truss72_doc)
        doc['nodes'][0]['position'] = [0.0, 'a', 0.0]
        assert self._error(doc).path == 'nodes[0].position[1]'

    def test_non_finite(self, truss72_doc):
        doc = deepcopy(truss72_doc)
        doc['materials'][0]['density'] = float('nan')
        assert self._error(doc).path == 'materials[0].density'

    def test_model_error(self, truss72_doc):
        doc = deepcopy(truss72_doc)
        doc['nodes'][0]['id'] = 99
        assert self._error(doc).path == 'model'

    def test_unknown_section(self, truss72_doc):
        doc = deepcopy(truss72_doc)
        doc['design_space']['categorical'][2]['sections'][5] = 'B06'
        assert self._error(doc).path == (
            'design_space.categorical[2].sections[5]')

    def test_unknown_binding(self, truss72_doc):
        doc = deepcopy(truss72_doc)
        doc['design_space']['continuous'] = [{
            'name': 'z1', 'binding': {'kind': 'spring'},
            'lower': 0.0, 'upper': 1.0}]
        assert self._error(doc).path == (
            'design_space.continuous[0].binding.kind')

    def test_double_binding(self, truss72_doc):
        doc = deepcopy(truss72_doc)
        doc['design_space']['continuous'] = [{
            'name': 'a1', 'binding': {'kind': 'section', 'elements': [1],
                                      'attribute': 'area'},
            'lower': 0.1, 'upper': 1.0}]
        assert "bound by both" in str(self._error(doc))

    def test_unknown_constraint(self, truss72_doc):
        doc = deepcopy(truss72_doc)
        doc['constraints'].append({'kind': 'buckling'})
        assert self._error(doc).path == 'constraints[2].kind'

    def test_unknown_load_case(self, truss72_doc):
        doc = deepcopy(truss72_doc)
        doc['constraints'][0]['load_cases'] = [0, 2]
        assert self._error(doc).path == 'constraints[0].load_cases[1]'

    def test_mechanism(self, truss72_doc):
        doc = deepcopy(truss72_doc)
        doc['supports'] = doc['supports'][:1]
        error = self._error(doc)
        assert error.path == 'supports'
        assert 'mechanism' in str(error)

    def test_unknown_objective(self, truss72_doc):
        doc = dict(truss72_doc, objective={'kind': 'cost'})
        assert self._error(doc).path == 'objective.kind'

    def test_shaped_sections(self):
        from frameopt.fem import CrossSection
        from frameopt.problems import build_problem
        from frameopt.problems import generate_bridge

        model = build_problem(generate_bridge()).model
        assert model.sections['box'] == CrossSection.box(
            'box', 0.125, 0.075, 0.005)


class TestDocuments:
    @pytest.fixture
    def lattice(self):
        from frameopt.problems import build_problem
        from frameopt.problems import generate_lattice
        return build_problem(generate_lattice((1, 1, 1)))

    def test_design_round_trip(self, lattice):
        from frameopt.design import extract_design
        from frameopt.problems import design_from_document
        from frameopt.problems import design_to_document

        logits = [np.array([0.0, 1.0, 0.0, 0.0])] * 4
        x = np.linspace(0.1, 1.5, lattice.space.n_continuous)
        design = extract_design(lattice.space, x, logits)
        doc = ujson.loads(ujson.dumps(design_to_document(lattice, design)))
        assert doc['problem'] == 'lattice1x1x1'
        assert doc['categorical']['profile_x'] == {
            'index': 1, 'label': 'rectangle',
            'probability': pytest.approx(design.probabilities[0][1])}
        read = design_from_document(lattice, doc)
        assert read.choices == [1] * 4
        assert np.allclose(read.x, design.x)

    def test_design_out_of_bounds(self, lattice):
        from frameopt.interfaces import DocumentError
        from frameopt.problems import design_from_document

        doc = {
            'continuous': {var.name: 0.0 for var in lattice.space.continuous},
            'categorical': {var.name: {'index': 0}
                            for var in lattice.space.categorical},
            }
        assert design_from_document(lattice, doc).labels == ['circle'] * 4
        doc['continuous']['orientation001'] = 2.0
        with pytest.raises(DocumentError) as exc:
            design_from_document(lattice, doc)
        assert exc.value.path == 'continuous.orientation001'

    def test_design_label_mismatch(self, lattice):
        from frameopt.interfaces import DocumentError
        from frameopt.problems import design_from_document

        doc = {
            'continuous': {var.name: 0.0 for var in lattice.space.continuous},
            'categorical': {var.name: {'index': 3, 'label': 'box'}
                            for var in lattice.space.categorical},
            }
        with pytest.raises(DocumentError):
            design_from_document(lattice, doc)

    def test_dump_and_load(self, tmpdir, truss72_doc):
        from frameopt.problems import dump_document
        from frameopt.problems import load_document
        path = str(tmpdir.join('truss72.json'))
        dump_document(truss72_doc, path)
        assert load_document(path) == truss72_doc

    def test_load_invalid_json(self, tmpdir):
        from frameopt.interfaces import DocumentError
        from frameopt.problems import load_document
        path = tmpdir.join('broken.json')
        path.write('{"nodes": [')
        with pytest.raises(DocumentError):
            load_document(str(path))


class TestProblemLoader:
    @pytest.mark.parametrize('name,kind,attrs', [
        ('builtin:truss72', 'Truss72', {}),
        ('builtin:lattice', 'Lattice', {'cells': (2, 2, 2)}),
        ('builtin:lattice:1,2,3', 'Lattice', {'cells': (1, 2, 3)}),
        ('builtin:bridge', 'Bridge', {'panels': 4}),
        ('builtin:bridge:6', 'Bridge', {'panels': 6}),
        ('problems/dome.json', 'FileProblem', {'path': 'problems/dome.json'}),
        ])
    def test_problem_loader(self, name, kind, attrs):
        from frameopt.problems import problem_loader
        loader = problem_loader(name)
        assert type(loader).__name__ == kind
        for key, value in attrs.items():
            assert getattr(loader, key) == value

    @pytest.mark.parametrize('name', [
        'builtin:dome', 'builtin:lattice:1,2', 'builtin:bridge:x',
        'builtin:truss72:3',
        ])
    def test_malformed(self, name):
        from frameopt.interfaces import DocumentError
        from frameopt.problems import problem_loader
        with pytest.raises(DocumentError):
            problem_loader(name)

    def test_resolve_problem(self, tmpdir, truss72_doc):
        from frameopt.problems import dump_document
        from frameopt.problems import resolve_problem
        from frameopt.problems import Truss72

        path = str(tmpdir.join('truss72.json'))
        dump_document(truss72_doc, path)
        for problem in (path, 'builtin:truss72', Truss72(), truss72_doc):
            resolved = resolve_problem(problem)
            assert resolved.name == 'truss72'
            assert resolved.space.n_categorical == 16

    def test_loader_decorators(self, config):
        from frameopt.interfaces import ProblemLoader

        class Generated(ProblemLoader):
            def __call__(self):
                return {'name': 'generated'}

        calls = []

        def decorator(func):
            def wrapper(*args, **kwargs):
                calls.append(args)
                return dict(func(*args, **kwargs), decorated=True)
            return wrapper

        config['load_problem_decorators'] = [decorator]
        assert Generated()() == {'name': 'generated', 'decorated': True}
        assert len(calls) == 1
