"""Locality-aware machine learning kernels and trace toolkit."""

try:
    from ._locml import *  # noqa: F401,F403  (wheel layout)
    from ._locml import __version__  # noqa: F401
except ImportError:  # in-tree builds put _locml on PYTHONPATH instead
    from _locml import *  # noqa: F401,F403
    from _locml import __version__  # noqa: F401
