from copy import deepcopy
import logging
from logging.config import dictConfig
import os
import sys
import threading


FRAMEOPT_CONFIG_ERROR = """
  Maybe you forgot to set the environment variable FRAMEOPT_CONFIG
  to point to your frameopt configuration file?  If so, please
  refer to the manual for more details.
"""

DEFAULT_CONFIG_FILE_LOCATIONS = (
    'frameopt-config.py',
    os.path.join('etc', 'frameopt-config.py'),
    )

#: Values used when neither a configuration file nor the command line
#: says otherwise.  The optimizer defaults live on the optimizer
#: classes themselves.
DEFAULTS = {
    'repeats': 10,
    'base_seed': 0,
    'output_dir': 'frameopt-out',
    'threads': 1,
    }


class Config(dict):
    """A dictionary that holds frameopt's configuration.

    Missing keys produce a hint about ``FRAMEOPT_CONFIG``.
    """
    initialized = False

    def __getitem__(self, name):
        try:
            return super().__getitem__(name)
        except KeyError:
            raise KeyError(
                "The required key '{}' was not found in your "
                "configuration. {}".format(name, FRAMEOPT_CONFIG_ERROR))


_config = Config()


class ComponentHandler:
    """Instantiates dicts with a ``'!'`` key.  The value is the dotted
    name of the factory, all other entries are its keyword arguments.
    """
    key = '!'

    def __init__(self, config):
        self.config = config
        self.components = []

    def __call__(self, name, props):
        from .util import resolve_dotted_name
        kwargs = dict(props)
        factory = resolve_dotted_name(kwargs.pop(self.key))
        component = factory(**kwargs)
        try:
            component.__frameopt_config_key__ = name
        except AttributeError:
            pass
        self.components.append(component)
        return component

    def finish(self):
        for component in self.components:
            if hasattr(component, 'initialize_component'):
                component.initialize_component(self.config)


class CopyHandler:
    """Replaces a dict with a ``'__copy__'`` key by a deep copy of the
    entry that the dotted path points to.  Other keys in the dict
    update the copy.
    """
    key = '__copy__'

    def __init__(self, configs):
        self.configs = configs

    @staticmethod
    def _lookup(configs, dotted_path):
        for config in reversed(configs):
            value = config
            try:
                for part in dotted_path.split('.'):
                    value = value[part]
            except (KeyError, TypeError):
                continue
            return value
        raise KeyError(dotted_path)

    def __call__(self, name, props):
        dotted_path = props[self.key]
        try:
            found = self._lookup(self.configs[-1:], dotted_path)
        except KeyError:
            found = None

        try:
            if found is props:
                # an entry that copies its own earlier definition
                value = self._lookup(self.configs[:-1], dotted_path)
            else:
                value = self._lookup(self.configs, dotted_path)
        except KeyError:
            if '__default__' in props:
                return props['__default__']
            raise

        value = deepcopy(value)
        overrides = {
            key: val for key, val in props.items()
            if not (key.startswith('__') and key.endswith('__'))
            }
        if overrides:
            value.update(overrides)
            value.pop(self.key, None)
        return value


class FactoryAliasHandler:
    """Accepts ``'__factory__'`` as an alias of ``'!'``."""
    key = '__factory__'

    def __init__(self, config):
        pass

    def __call__(self, name, props):
        props[ComponentHandler.key] = props.pop(self.key)
        return props


def _walk(props, handlers):
    if isinstance(props, dict):
        items = list(props.items())
    elif isinstance(props, list):
        items = list(enumerate(props))
    else:
        return

    for key, value in items:
        if not isinstance(value, (dict, list)):
            continue
        _walk(value, handlers)
        if isinstance(value, dict):
            for handler_key, handler in handlers.items():
                if handler_key in value:
                    value = props[key] = handler(str(key), value)


def _run_handlers(config, handlers):
    wrapped = {'root': config}
    _walk(wrapped, handlers)
    for handler in handlers.values():
        if hasattr(handler, 'finish'):
            handler.finish()
    return wrapped['root']


def _initialize_logging(config):
    if 'logging' in config:
        dictConfig(config['logging'])
    else:
        logging.basicConfig(level=logging.INFO)


def process_config(*configs):
    """Merges *configs* left to right, resolves copies and creates
    components, then sets up logging.
    """
    merged = {}
    for config in configs:
        before = deepcopy(merged)
        merged.update(config)
        _run_handlers(merged, {
            FactoryAliasHandler.key: FactoryAliasHandler(merged),
            CopyHandler.key: CopyHandler([before, config]),
            })

    _run_handlers(merged, {ComponentHandler.key: ComponentHandler(merged)})
    _initialize_logging(merged)
    return merged


def _read_config_file(fname):
    sys.path.insert(0, os.path.dirname(fname))
    with open(fname) as f:
        return eval(f.read(), {
            'environ': os.environ,
            'here': os.path.abspath(os.path.dirname(fname)),
            })


_get_config_lock = threading.RLock()


def get_config(**extra):
    with _get_config_lock:
        return _get_config(**extra)


def _get_config(**extra):
    if not _config.initialized:
        _config.update(DEFAULTS)
        _config.update(extra)
        _config.initialized = True

        fnames = os.environ.get('FRAMEOPT_CONFIG')
        if fnames is None:
            for fname in DEFAULT_CONFIG_FILE_LOCATIONS:
                if os.path.exists(fname):  # pragma: no cover
                    fnames = fname
                    print("Using configuration at {}".format(fname))
                    break

        configs = []
        if fnames is not None:
            configs = [_read_config_file(fname.strip())
                       for fname in fnames.split(',')]
        _config.update(process_config(dict(_config), *configs))

        threads = os.environ.get('FRAMEOPT_THREADS')
        if threads:
            _config['threads'] = int(threads)
    return _config


def initialize_config(**extra):
    if _config.initialized:
        raise RuntimeError("Configuration was already initialized")
    return get_config(**extra)
