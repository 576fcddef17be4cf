"""Interfaces defining the behaviour of frameopt's components, and the
errors they raise.
"""

from abc import abstractmethod
from abc import ABCMeta

from sklearn.base import BaseEstimator

from .util import PluggableDecorator


class FrameoptError(Exception):
    """Base class of all errors raised by frameopt.

    Carries a human readable *error_message* and a numeric
    *error_code* that the command line tools use when reporting.
    """
    error_code = -1

    def __init__(self, error_message, error_code=None):
        super().__init__(error_message)
        self.error_message = error_message
        if error_code is not None:
            self.error_code = error_code

    def __str__(self):
        return "{} ({})".format(self.error_message, self.error_code)


class DomainError(FrameoptError, ValueError):
    """An argument is outside of the mathematical domain of an
    operation, e.g. the logit of a probability of zero.
    """
    error_code = 10


class ModelError(FrameoptError, ValueError):
    """A finite element model is malformed."""
    error_code = 20


class MechanismError(FrameoptError):
    """The reduced stiffness matrix is singular or not positive
    definite.

    :attr modes:
      A list of ``(node_id, dof_name, weight)`` tuples describing the
      dominant entries of the offending zero-energy mode.
    """
    error_code = 21

    def __init__(self, error_message, modes=(), error_code=None):
        super().__init__(error_message, error_code)
        self.modes = list(modes)


class ConfigurationError(FrameoptError, ValueError):
    """A design space, problem or optimizer setting is inconsistent."""
    error_code = 30


class NumericalError(FrameoptError, ArithmeticError):
    """A numerical procedure failed: non-finite values, a solver that
    did not converge, or a repeated eigenvalue that has no gradient.
    """
    error_code = 40


class DocumentError(FrameoptError, ValueError):
    """A problem document violates the schema.

    :attr path:
      The JSON path of the offending entry, e.g.
      ``elements[3].nodes``.
    """
    error_code = 50

    def __init__(self, error_message, path='', error_code=None):
        if path:
            error_message = "{}: {}".format(path, error_message)
        super().__init__(error_message, error_code)
        self.path = path


class ProblemLoaderMeta(ABCMeta):
    def __init__(cls, name, bases, attrs, **kwargs):
        super().__init__(name, bases, attrs, **kwargs)
        cls.__call__ = PluggableDecorator(
            'load_problem_decorators')(cls.__call__)


class ProblemLoader(metaclass=ProblemLoaderMeta):
    """A :class:`~frameopt.interfaces.ProblemLoader` is responsible for
    producing problem documents, either by reading them from disk or
    by generating them.
    """

    @abstractmethod
    def __call__(self):
        """Returns the problem document.

        :return:
          A dict following the problem document schema described in
          :mod:`frameopt.problems`.
        """


class Optimizer(BaseEstimator, metaclass=ABCMeta):
    """An :class:`Optimizer` searches a problem's mixed design space.

    Optimizers are scikit-learn estimators so that their settings are
    available through :meth:`get_params` and :meth:`set_params`, and
    independent copies may be created using
    :func:`sklearn.base.clone`.
    """

    #: Short name used in output files and logs.
    method = None

    @abstractmethod
    def run(self, problem, rng=None):
        """Runs the optimizer on *problem*.

        :param problem:
          An :class:`~frameopt.responses.OptimizationProblem`.

        :param rng:
          A :class:`numpy.random.Generator`.  If ``None``, a generator
          is created from the optimizer's *seed* parameter.

        :return:
          A :class:`~frameopt.optimizer.RunRecord`.  Errors that abort
          the run are not raised but reported in the record.
        """
