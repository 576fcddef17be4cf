"""A genetic algorithm baseline for the same mixed design spaces.

Chromosomes hold one integer gene per categorical variable and one
gene in ``[0, 1]`` per continuous variable, mapped linearly onto the
variable's bounds.  Fitness is the penalized objective; individuals
whose analysis fails get infinite fitness.
"""

from dataclasses import dataclass

from joblib import delayed
from joblib import Parallel
import numpy as np

from .design import Design
from .gsm import make_rng
from .interfaces import ConfigurationError
from .interfaces import FrameoptError
from .interfaces import Optimizer
from .optimizer import IterationRecord
from .optimizer import penalized_objective
from .optimizer import RunRecord
from .optimizer import selection_key
from .util import logger
from .util import timer


@dataclass
class Chromosome:
    choices: np.ndarray
    genes: np.ndarray

    def copy(self):
        return Chromosome(self.choices.copy(), self.genes.copy())

    def design(self, space):
        x = space.lower + self.genes * (space.upper - space.lower)
        return Design(
            x=x,
            choices=[int(c) for c in self.choices],
            labels=[var.labels[int(c)]
                    for var, c in zip(space.categorical, self.choices)],
            )


@dataclass
class Fitness:
    value: float
    objective: float = np.inf
    max_violation: float = np.inf


def _evaluate(problem, chromosome, penalty_factor):
    design = chromosome.design(problem.space)
    try:
        evaluation = problem.evaluate(design.x, choices=design.choices)
    except FrameoptError as exc:
        logger.debug("Individual failed: {}".format(exc))
        return Fitness(np.inf), 1, 0
    return (
        Fitness(
            value=penalized_objective(
                evaluation.objective, evaluation.constraints, penalty_factor),
            objective=evaluation.objective,
            max_violation=evaluation.max_violation,
            ),
        evaluation.primal_solves + evaluation.modal_solves,
        evaluation.modal_solves,
        )


class GeneticAlgorithm(Optimizer):
    """Generational GA with tournament selection, uniform crossover,
    per-gene mutation and elitism.

    The population has ``population_multiplier`` individuals per design
    variable.  Every generation evaluates the whole population, so the
    number of analyses per generation equals the population size.  The
    reported design is the best individual of all generations by
    :func:`~frameopt.optimizer.selection_key`.
    """
    method = 'ga'

    def __init__(
        self,
        population_multiplier=10,
        crossover_rate=0.9,
        mutation_rate=0.1,
        penalty_factor=1000.0,
        max_iterations=100,
        elitism=1,
        tournament_size=2,
        mutation_scale=0.1,
        initial_population=None,
        n_jobs=1,
        seed=None,
    ):
        self.population_multiplier = population_multiplier
        self.crossover_rate = crossover_rate
        self.mutation_rate = mutation_rate
        self.penalty_factor = penalty_factor
        self.max_iterations = max_iterations
        self.elitism = elitism
        self.tournament_size = tournament_size
        self.mutation_scale = mutation_scale
        self.initial_population = initial_population
        self.n_jobs = n_jobs
        self.seed = seed

    def population_size(self, space):
        return max(2, self.population_multiplier * space.n_variables)

    def _check_params(self, space):
        if space.n_variables == 0:
            raise ConfigurationError("Design space has no variables")
        if not 0 <= self.crossover_rate <= 1:
            raise ConfigurationError("crossover_rate must be in [0, 1]")
        if not 0 <= self.mutation_rate <= 1:
            raise ConfigurationError("mutation_rate must be in [0, 1]")
        if not 0 <= self.elitism < self.population_size(space):
            raise ConfigurationError(
                "elitism must be smaller than the population size")
        if self.tournament_size < 1:
            raise ConfigurationError("tournament_size must be positive")

    def _random_individual(self, space, rng):
        return Chromosome(
            choices=np.array([rng.integers(var.n_choices)
                              for var in space.categorical], dtype=int),
            genes=rng.random(space.n_continuous),
            )

    def _initial_population(self, space, rng):
        size = self.population_size(space)
        if self.initial_population is not None:
            population = [
                Chromosome(np.array(choices, dtype=int),
                           np.array(genes, dtype=float))
                for choices, genes in self.initial_population]
            if len(population) != size:
                raise ConfigurationError(
                    "initial_population needs {} individuals, got {}".format(
                        size, len(population)))
            return population
        return [self._random_individual(space, rng) for _ in range(size)]

    def _select(self, population, fitness, rng):
        contestants = rng.integers(len(population), size=self.tournament_size)
        best = min(contestants, key=lambda i: (fitness[i].value, i))
        return population[best]

    def _crossover(self, first, second, rng):
        child = first.copy()
        if rng.random() < self.crossover_rate:
            mask = rng.random(child.choices.size) < 0.5
            child.choices[mask] = second.choices[mask]
            mask = rng.random(child.genes.size) < 0.5
            child.genes[mask] = second.genes[mask]
        return child

    def _mutate(self, child, space, rng):
        for m, var in enumerate(space.categorical):
            if rng.random() < self.mutation_rate:
                child.choices[m] = rng.integers(var.n_choices)
        for i in range(child.genes.size):
            if rng.random() < self.mutation_rate:
                child.genes[i] = np.clip(
                    child.genes[i] + self.mutation_scale * rng.normal(),
                    0.0, 1.0)
        return child

    def _evaluate_population(self, problem, population):
        return Parallel(n_jobs=self.n_jobs, prefer='threads')(
            delayed(_evaluate)(problem, chromosome, self.penalty_factor)
            for chromosome in population)

    def run(self, problem, rng=None):
        space = problem.space
        self._check_params(space)
        if rng is None:
            rng = make_rng(self.seed)
        record = RunRecord(method=self.method, seed=self.seed)
        population = self._initial_population(space, rng)
        best, best_key = None, None

        with timer() as elapsed:
            for generation in range(self.max_iterations):
                results = self._evaluate_population(problem, population)
                fitness = [fit for fit, _, _ in results]
                record.fe_solves += sum(solves for _, solves, _ in results)
                record.modal_solves += sum(modal for _, _, modal in results)

                order = sorted(range(len(population)),
                               key=lambda i: (fitness[i].value, i))
                leader = order[0]
                record.history.append(_generation_record(
                    generation, fitness[leader], population[leader]))
                for i in order:
                    key = selection_key(
                        fitness[i].max_violation, fitness[i].value)
                    if best_key is None or key < best_key:
                        best, best_key = population[i].copy(), key
                logger.debug(
                    "ga generation {}: best penalized={:.6g}".format(
                        generation, fitness[leader].value))

                offspring = [population[i].copy()
                             for i in order[:self.elitism]]
                while len(offspring) < len(population):
                    child = self._crossover(
                        self._select(population, fitness, rng),
                        self._select(population, fitness, rng), rng)
                    offspring.append(self._mutate(child, space, rng))
                population = offspring

            if best is None:
                best = population[0]
            record.finish(problem, best.design(space), self.penalty_factor)
        record.wall_time = elapsed['elapsed']
        logger.info(
            "ga run (seed {}) finished after {} generations: objective={} "
            "feasible={}".format(
                self.seed, record.iterations, record.objective,
                record.feasible))
        return record


def _generation_record(generation, fitness, chromosome):
    return IterationRecord(
        iteration=generation,
        phase='generation',
        temperature=np.nan,
        objective=fitness.objective,
        penalized=fitness.value,
        max_violation=fitness.max_violation,
        choices=tuple(int(c) for c in chromosome.choices),
        )
