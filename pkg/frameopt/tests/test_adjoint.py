import numpy as np
import pandas as pd
import pytest


class TestSolveAdjoint:
    def test_free_dofs_only(self, make_frame10):
        from frameopt.adjoint import solve_adjoint
        from frameopt.fem import solve

        model = make_frame10()
        state = solve(model.configuration())
        rhs = np.random.default_rng(0).standard_normal((model.n_dofs, 2))
        lam = solve_adjoint(state, rhs)
        free = model.free_dofs
        assert np.all(lam[model.fixed_dofs] == 0)
        reduced = state.stiffness[np.ix_(free, free)]
        assert np.allclose(reduced @ lam[free], rhs[free])

    def test_compliance_adjoint_is_displacement(self, make_cantilever):
        from frameopt.adjoint import solve_adjoint
        from frameopt.fem import solve

        state = solve(make_cantilever().configuration())
        lam = solve_adjoint(state, state.loads[:, 0])
        assert np.allclose(lam, state.displacements[:, 0])


class TestGradLogits:
    def test_chain(self):
        from frameopt.adjoint import grad_logits
        from frameopt.design import AttributeMatrix
        from frameopt.gsm import soft_sample_jacobian

        attributes = AttributeMatrix(['area', 'iyy'], [[1.0, 2.0, 3.0],
                                                       [0.5, 0.1, 0.2]])
        jacobian = soft_sample_jacobian(np.array([0.2, 0.3, 0.5]), 0.5)
        grad_a = np.array([2.0, -1.0])
        expected = jacobian.T @ (attributes.values.T @ grad_a)
        assert np.allclose(
            grad_logits(grad_a, attributes, jacobian), expected)

    def test_rows_per_function(self):
        from frameopt.adjoint import grad_logits
        from frameopt.design import AttributeMatrix

        attributes = AttributeMatrix(['area'], [[1.0, 2.0]])
        grad_a = np.array([[1.0], [3.0]])
        result = grad_logits(grad_a, attributes, np.eye(2))
        assert result.tolist() == [[1.0, 2.0], [3.0, 6.0]]

    def test_combine(self):
        from frameopt.adjoint import GradientBundle
        bundle = GradientBundle(
            continuous=np.array([[1.0, 2.0], [3.0, 4.0]]),
            attributes=[np.array([[1.0], [-1.0]])],
            )
        grad_x, grad_a = bundle.combine([1.0, 0.5])
        assert grad_x.tolist() == [2.5, 4.0]
        assert grad_a[0].tolist() == [0.5]


class TestFdCheck:
    @staticmethod
    def function(z):
        return np.array([z[0] ** 2 + 3 * z[1], np.sin(z[0]) * z[1]])

    @staticmethod
    def gradient(z):
        return np.array([[2 * z[0], 3.0],
                         [np.cos(z[0]) * z[1], np.sin(z[0])]])

    def test_exact_gradient_passes(self):
        from frameopt.adjoint import fd_check
        report = fd_check(self.function, self.gradient, [0.7, -1.3],
                          function_names=['f', 'g'],
                          variable_names=['a', 'b'])
        assert report.passed
        assert report.max_error < 1e-7
        assert len(report.frame) == 4
        assert report.frame['function'].tolist() == ['f', 'f', 'g', 'g']

    def test_wrong_gradient_fails(self):
        from frameopt.adjoint import fd_check

        def wrong(z):
            grad = self.gradient(z)
            grad[1, 0] *= 1.01
            return grad

        report = fd_check(self.function, wrong, [0.7, -1.3])
        assert not report.passed
        worst = report.frame.loc[report.frame['relative_error'].idxmax()]
        assert (worst['function'], worst['variable']) == (1, 0)

    def test_noise_floor(self):
        from frameopt.adjoint import fd_check
        # both derivatives vanish below the noise floor of a large value
        report = fd_check(
            lambda z: np.array([1e8 + 1e-12 * z[0]]),
            lambda z: np.array([[0.0]]), [1.0])
        assert report.passed

    def test_no_variables(self):
        from frameopt.adjoint import FdReport
        assert FdReport(pd.DataFrame(), 1e-5).passed


class TestSensitivities:
    def test_audit_frame10(self, frame10):
        from frameopt.adjoint import audit_gradients
        from frameopt.gsm import make_rng

        reports = audit_gradients(frame10, make_rng(0), tolerance=1e-5)
        assert [label for label, _ in reports] == [
            'continuous', 'attributes:columns', 'logits:columns',
            'attributes:top', 'logits:top']
        for label, report in reports:
            assert report.passed, (label, report.frame)

    def test_audit_frequency(self, make_frame10):
        from frameopt.adjoint import audit_gradients
        from frameopt.gsm import make_rng
        from frameopt.responses import Frequency
        from frameopt.responses import Mass
        from frameopt.responses import OptimizationProblem
        from frameopt.tests.conftest import frame10_space

        model = make_frame10()
        problem = OptimizationProblem(
            model, frame10_space(model), Mass(), [Frequency(1.0)])
        for label, report in audit_gradients(
                problem, make_rng(1), tolerance=1e-4):
            assert report.passed, (label, report.frame)

    def test_load_cases_are_independent(self, make_cantilever):
        from frameopt.design import ContinuousVariable
        from frameopt.design import DesignSpace
        from frameopt.design import PropertyBinding
        from frameopt.fem import FrameModel
        from frameopt.fem import LoadCase
        from frameopt.fem import PointLoad
        from frameopt.responses import Compliance
        from frameopt.responses import OptimizationProblem
        from frameopt.responses import StrainEnergy

        base = make_cantilever(n_elements=3)
        lateral = LoadCase('lateral', point_loads=(
            PointLoad(4, (0.0, 500.0, 0.0)),))
        model = FrameModel(
            base.nodes, base.elements, base.materials.values(),
            base.sections.values(), base.supports,
            base.load_cases + [lateral])

        def space():
            return DesignSpace(continuous=[ContinuousVariable(
                'iyy', PropertyBinding([1, 2, 3], 'iyy'), 1e-7, 1e-4)])

        both = OptimizationProblem(
            model, space(), StrainEnergy(0), [Compliance(1)])
        evaluation = both.evaluate([4e-6], gradients=True)
        assert evaluation.adjoint_solves == 2
        # the lateral load bends about the local z axis only
        assert evaluation.gradients.continuous[1, 0] == pytest.approx(
            0.0, abs=1e-12)
        assert evaluation.gradients.continuous[0, 0] < 0

        single = OptimizationProblem(
            model, space(), StrainEnergy(0)).evaluate([4e-6], gradients=True)
        assert np.allclose(single.gradients.continuous[0],
                           evaluation.gradients.continuous[0])

    def test_length_binding_chained_through_first_node(self, make_cantilever):
        from frameopt.adjoint import audit_gradients
        from frameopt.design import ContinuousVariable
        from frameopt.design import DesignSpace
        from frameopt.design import LengthBinding
        from frameopt.design import NodeCoordinateBinding
        from frameopt.gsm import make_rng
        from frameopt.responses import Compliance
        from frameopt.responses import Displacement
        from frameopt.responses import OptimizationProblem

        model = make_cantilever(n_elements=2, length=2.0)
        space = DesignSpace(continuous=[
            ContinuousVariable('z2', NodeCoordinateBinding([2], 'z'),
                               -0.1, 0.1),
            ContinuousVariable('y2', NodeCoordinateBinding([2], 'y'),
                               -0.1, 0.1),
            ContinuousVariable('length2', LengthBinding(2), 0.8, 1.2),
            ])
        problem = OptimizationProblem(
            model, space, Compliance(), [Displacement(3, 'uz', 0.05)])
        (label, report), = audit_gradients(problem, make_rng(3))
        assert label == 'continuous'
        assert report.passed, report.frame
