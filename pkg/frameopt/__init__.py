import pkg_resources

try:
    __version__ = pkg_resources.get_distribution("frameopt").version
except Exception:
    __version__ = 'n/a'
