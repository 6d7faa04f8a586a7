"""Stochastic branching particle solver for ADR PDEs on periodic domains."""

try:
    from ._branchpde import *  # noqa: F401,F403  (installed package layout)
    from ._branchpde import __version__  # noqa: F401
except ImportError:  # in-tree build: extension sits next to the package on sys.path
    from _branchpde import *  # noqa: F401,F403
    from _branchpde import __version__  # noqa: F401
