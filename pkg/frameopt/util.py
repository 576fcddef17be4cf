"""Assorted utilities.
"""

from contextlib import contextmanager
from functools import wraps
from importlib import import_module
from inspect import getcallargs
from inspect import signature
import logging
import os
from time import time

import psutil

from .config import FRAMEOPT_CONFIG_ERROR
from .config import get_config

logger = logging.getLogger('frameopt')


def resolve_dotted_name(dotted_name):
    if ':' in dotted_name:
        module, name = dotted_name.split(':')
    elif '.' in dotted_name:
        module, name = dotted_name.rsplit('.', 1)
    else:
        module, name = dotted_name, None

    attr = import_module(module)
    if name:
        for part in name.split('.'):
            attr = getattr(attr, part)
    return attr


def args_from_config(func):
    """Decorator that fills in missing arguments of *func* with the
    values of configuration entries of the same name.
    """
    func_args = signature(func).parameters

    @wraps(func)
    def wrapper(*args, **kwargs):
        config = get_config()
        for i, argname in enumerate(func_args):
            if len(args) > i or argname in kwargs:
                continue
            if argname in config:
                kwargs[argname] = config[argname]
        try:
            getcallargs(func, *args, **kwargs)
        except TypeError as exc:
            exc.args = ("{}\n{}".format(exc.args[0], FRAMEOPT_CONFIG_ERROR),)
            raise exc
        return func(*args, **kwargs)

    wrapper.__wrapped__ = func
    return wrapper


@contextmanager
def timer(log=None, message=None):
    if log is not None:
        log("{}...".format(message))

    info = {}
    t0 = time()
    yield info

    info['elapsed'] = time() - t0
    if log is not None:
        log("{} done in {:.3f} sec.".format(message, info['elapsed']))


def memory_usage_psutil():
    """Return the current process memory usage (rss, vms) in MB.
    """
    mem = psutil.Process(os.getpid()).memory_info()
    return mem.rss / float(2 ** 20), mem.vms / float(2 ** 20)


class PluggableDecorator:
    """Wraps a function with the decorators listed under
    *decorator_config_name* in the configuration.  The configuration
    is looked up on first call.
    """
    def __init__(self, decorator_config_name):
        self.decorator_config_name = decorator_config_name
        self.wrapped = None

    def __call__(self, func):
        self.func = func

        @wraps(func)
        def wrapper(*args, **kwargs):
            if self.wrapped is None:
                decorators = [
                    resolve_dotted_name(dec) if isinstance(dec, str) else dec
                    for dec in get_config().get(self.decorator_config_name, [])
                    ]
                wrapped = self.func
                for decorator in decorators:
                    wrapped = decorator(wrapped)
                self.wrapped = wraps(self.func)(wrapped) if decorators \
                    else self.func
            return self.wrapped(*args, **kwargs)

        return wrapper
