"""Repeated seeded runs, their statistics and output files, and the
``frameopt`` command line tool.
"""

from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
import math
import os
import sys

from docopt import docopt
from joblib import delayed
from joblib import Parallel
import numpy as np
import pandas as pd
from sklearn.base import clone
import ujson

from . import __version__
from .adjoint import audit_gradients
from .config import initialize_config
from .ga import GeneticAlgorithm
from .gsm import make_rng
from .interfaces import ConfigurationError
from .interfaces import FrameoptError
from .optimizer import BiGSMO
from .optimizer import GSMO
from .problems import build_problem
from .problems import design_to_document
from .problems import resolve_document
from .problems import resolve_problem
from .problems import validate_document
from .util import args_from_config
from .util import logger
from .util import memory_usage_psutil
from .util import timer

OPTIMIZERS = {
    'gsmo': GSMO,
    'bigsmo': BiGSMO,
    'ga': GeneticAlgorithm,
    }

#: Columns of the convergence traces written by :func:`emit_outputs`.
TRACE_COLUMNS = ['iteration', 'objective', 'penalized', 'max_violation',
                 'temperature']


def make_optimizer(method, optimizers=None):
    """A fresh optimizer for *method*.

    *optimizers* maps method names to configured optimizer instances;
    they take precedence over the built-in defaults.
    """
    if optimizers and method in optimizers:
        return clone(optimizers[method])
    if method not in OPTIMIZERS:
        raise ConfigurationError("Unknown method {!r}; use one of {}".format(
            method, ', '.join(sorted(set(OPTIMIZERS) | set(optimizers or ())))))
    return OPTIMIZERS[method]()


def _applicable(optimizer, params):
    known = optimizer.get_params()
    applicable = {}
    for key, value in (params or {}).items():
        if key in known:
            applicable[key] = value
        else:
            logger.warning("Option {!r} does not apply to {}; ignoring".format(
                key, type(optimizer).__name__))
    return applicable


def _run_one(template, problem, seed):
    optimizer = clone(template).set_params(seed=seed)
    return optimizer.run(problem)


@dataclass
class RunSummary:
    """Statistics of repeated runs.

    *best*, *mean* and *std* (population standard deviation) are taken
    over the final objectives of completed runs only; aborted runs are
    listed with their diagnostic.
    """
    problem: str
    method: str
    repeats: int
    base_seed: int
    completed: int
    feasible: int
    best: float
    mean: float
    std: float
    fe_solves_total: int
    modal_solves_total: int
    adjoint_solves_total: int
    aborted: list = field(default_factory=list)
    runs: list = field(default_factory=list)


def summarize(records, problem_name, method, base_seed):
    """Builds the :class:`RunSummary` of *records*.  The result depends
    on the records' outcomes only, not on their timings.
    """
    frame = pd.DataFrame([{
        'seed': rec.seed,
        'status': rec.status,
        'objective': rec.objective,
        'max_violation': rec.max_violation,
        'feasible': rec.feasible,
        'iterations': rec.iterations,
        'fe_solves': rec.fe_solves,
        'modal_solves': rec.modal_solves,
        'adjoint_solves': rec.adjoint_solves,
        } for rec in records], columns=[
            'seed', 'status', 'objective', 'max_violation', 'feasible',
            'iterations', 'fe_solves', 'modal_solves', 'adjoint_solves'])

    completed = frame[frame['status'] == 'completed']
    objectives = completed['objective'].astype(float)
    nan = float('nan')
    return RunSummary(
        problem=problem_name,
        method=method,
        repeats=len(records),
        base_seed=base_seed,
        completed=len(completed),
        feasible=int(completed['feasible'].astype(bool).sum()),
        best=float(objectives.min()) if len(objectives) else nan,
        mean=float(objectives.mean()) if len(objectives) else nan,
        std=float(objectives.std(ddof=0)) if len(objectives) else nan,
        fe_solves_total=int(frame['fe_solves'].sum()),
        modal_solves_total=int(frame['modal_solves'].sum()),
        adjoint_solves_total=int(frame['adjoint_solves'].sum()),
        aborted=[{'seed': rec.seed, 'error': rec.error}
                 for rec in records if rec.status != 'completed'],
        runs=frame.to_dict(orient='records'),
        )


@args_from_config
def run_benchmark(problem, method='gsmo', repeats=10, base_seed=0,
                  optimizers=None, params=None, threads=1):
    """Runs *method* on *problem* *repeats* times with seeds
    ``base_seed .. base_seed + repeats - 1``.

    :param problem:
      An :class:`~frameopt.responses.OptimizationProblem`.

    :param params:
      Optimizer settings overriding the configured ones.  Settings the
      optimizer does not know are ignored with a warning.

    :param threads:
      Number of runs executed concurrently.

    :return:
      A tuple ``(summary, records)``.
    """
    template = make_optimizer(method, optimizers)
    template.set_params(**_applicable(template, params))
    seeds = [base_seed + k for k in range(repeats)]

    with timer(logger.info, "Running {} x{} on {}".format(
            method, repeats, problem.name)):
        records = Parallel(n_jobs=threads, prefer='threads')(
            delayed(_run_one)(template, problem, seed) for seed in seeds)

    for rec in records:
        logger.info("Seed {}: {} objective={} feasible={} fe_solves={}".format(
            rec.seed, rec.status, rec.objective, rec.feasible,
            rec.fe_solves))
    rss, vms = memory_usage_psutil()
    logger.info("Memory usage: rss {:.1f} MB, vms {:.1f} MB".format(rss, vms))

    summary = summarize(records, problem.name, method, base_seed)
    if summary.aborted:
        logger.error("{} of {} runs aborted".format(
            len(summary.aborted), summary.repeats))
    return summary, records


def json_safe(obj):
    """Converts numpy values, tuples and non-finite floats into types
    that serialize to valid JSON.
    """
    if isinstance(obj, dict):
        return {str(key): json_safe(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [json_safe(value) for value in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(obj, path):
    with open(path, 'w') as f:
        f.write(ujson.dumps(json_safe(obj), indent=2, sort_keys=True))
        f.write('\n')


def emit_outputs(records, summary, out_dir, problem):
    """Writes the results of :func:`run_benchmark` to *out_dir*:

    - ``summary.json``: the :class:`RunSummary`
    - ``run_<k>.csv``: the convergence trace of run *k*
    - ``design_<k>.json``: the final design of run *k*
    - ``timing.json``: wall times and memory use, kept apart so that
      ``summary.json`` is reproducible
    """
    os.makedirs(out_dir, exist_ok=True)
    write_json(asdict(summary), os.path.join(out_dir, 'summary.json'))

    for k, rec in enumerate(records):
        rec.to_frame()[TRACE_COLUMNS].to_csv(
            os.path.join(out_dir, 'run_{}.csv'.format(k)),
            index=False, float_format='%.17g')
        if rec.design is None:
            continue
        doc = design_to_document(problem, rec.design)
        doc.update({
            'method': rec.method,
            'seed': rec.seed,
            'status': rec.status,
            'objective': rec.objective,
            'max_violation': rec.max_violation,
            'feasible': rec.feasible,
            })
        write_json(doc, os.path.join(out_dir, 'design_{}.json'.format(k)))

    rss, _ = memory_usage_psutil()
    wall_times = [rec.wall_time for rec in records]
    write_json({
        'wall_times': wall_times,
        'mean_wall_time': float(np.mean(wall_times)) if wall_times else None,
        'memory_rss_mb': rss,
        }, os.path.join(out_dir, 'timing.json'))
    logger.info("Wrote results of {} runs to {}".format(len(records), out_dir))


def _cli_params(arguments):
    conversions = [
        ('--max-iters', 'max_iterations', int),
        ('--step', 'step_size', float),
        ('--penalty', 'penalty_factor', float),
        ('--temp0', 'initial_temp', float),
        ('--decay', 'decay', float),
        ('--tmin', 'min_temp', float),
        ('--samples', 'samples', int),
        ]
    params = {}
    for option, name, convert in conversions:
        if arguments[option] is not None:
            params[name] = convert(arguments[option])
    if arguments['--bilevel'] is not None:
        try:
            outer, inner = (int(v) for v in arguments['--bilevel'].split(','))
        except ValueError:
            raise ConfigurationError(
                "--bilevel expects OUTER,INNER, got {!r}".format(
                    arguments['--bilevel']))
        params['outer_iterations'] = outer
        params['inner_iterations'] = inner
    return params


def _source(arguments, config):
    problem = arguments['--problem'] or config.get('problem')
    if problem is None:
        raise ConfigurationError(
            "No problem given; use --problem or set 'problem' in the "
            "configuration")
    return problem


def _problem_from(arguments, config):
    with timer(logger.info, "Building problem"):
        return resolve_problem(_source(arguments, config))


def run_cmd(arguments, config):
    problem = _problem_from(arguments, config)
    kwargs = {'method': arguments['--method'],
              'params': _cli_params(arguments)}
    if arguments['--repeats'] is not None:
        kwargs['repeats'] = int(arguments['--repeats'])
    if arguments['--seed'] is not None:
        kwargs['base_seed'] = int(arguments['--seed'])
    summary, records = run_benchmark(problem, **kwargs)
    out_dir = arguments['--out'] or config['output_dir']
    emit_outputs(records, summary, out_dir, problem)
    print("{}: best={} mean={} std={} feasible={}/{} aborted={}".format(
        summary.method, summary.best, summary.mean, summary.std,
        summary.feasible, summary.repeats, len(summary.aborted)))
    return 1 if summary.aborted else 0


def validate_cmd(arguments, config):
    with timer(logger.info, "Validating problem"):
        doc = validate_document(resolve_document(_source(arguments, config)))
        problem = build_problem(doc)
    space = problem.space
    evaluation = problem.evaluate(
        space.initial_x(problem.model), choices=[0] * space.n_categorical)
    print("{}: {} nodes, {} elements, {} continuous and {} categorical "
          "variables, {} constraints; initial max violation {:.4g}".format(
              problem.name, problem.model.n_nodes,
              problem.model.n_elements, space.n_continuous,
              space.n_categorical, len(problem.constraints),
              evaluation.max_violation))
    return 0


def fdcheck_cmd(arguments, config):
    problem = _problem_from(arguments, config)
    seed = int(arguments['--seed']) if arguments['--seed'] is not None \
        else config['base_seed']
    tolerance = float(arguments['--tol'] or 1e-5)
    reports = audit_gradients(problem, make_rng(seed), tolerance=tolerance)
    failed = 0
    for label, report in reports:
        status = 'ok' if report.passed else 'FAILED'
        print("{:<40} max relative error {:.3g}  {}".format(
            label, report.max_error, status))
        failed += not report.passed
    return 1 if failed else 0


def frameopt_cmd(argv=sys.argv[1:]):  # pragma: no cover
    """\
Optimize truss and frame structures with mixed categorical and
continuous design variables.

'run' executes repeated seeded runs of an optimizer and writes
summary.json, run_<k>.csv, design_<k>.json and timing.json to the
output directory.  'validate' checks a problem document and analyses
its initial design.  'fdcheck' compares adjoint gradients against
finite differences at a random design.

Problems are JSON files or one of builtin:truss72,
builtin:lattice:X,Y,Z and builtin:bridge:P.  Settings not given on the
command line are taken from the configuration (FRAMEOPT_CONFIG).

Usage:
  frameopt run [--problem=<p>] [options]
  frameopt validate [--problem=<p>]
  frameopt fdcheck [--problem=<p>] [--seed=<s>] [--tol=<t>]
  frameopt version
  frameopt -h | --help

Options:
  --problem=<p>      Problem file or builtin problem.
  --method=<m>       One of gsmo, bigsmo, ga [default: gsmo].
  --repeats=<r>      Number of runs.
  --seed=<s>         Seed of the first run.
  --out=<dir>        Output directory.
  --max-iters=<n>    Iterations (generations for ga; not for bigsmo).
  --step=<h>         Step size.
  --penalty=<c>      Penalty factor.
  --temp0=<t>        Initial temperature.
  --decay=<d>        Temperature decay per iteration.
  --tmin=<t>         Minimum temperature.
  --bilevel=<o,i>    Outer and inner iterations of bigsmo.
  --samples=<m>      Gumbel samples per iteration (majority vote).
  --tol=<t>          Relative error tolerance of fdcheck [default: 1e-5].
  -h --help          Show this screen.
"""
    arguments = docopt(frameopt_cmd.__doc__, argv=argv)
    if arguments['version']:
        print(__version__)
        return

    commands = [('run', run_cmd), ('validate', validate_cmd),
                ('fdcheck', fdcheck_cmd)]
    name, command = next(
        (name, cmd) for name, cmd in commands if arguments[name])
    config = initialize_config(__mode__=name)
    try:
        code = command(arguments, config)
    except FrameoptError as exc:
        logger.error(str(exc))
        print("Error: {}".format(exc), file=sys.stderr)
        code = 1
    sys.exit(code)
