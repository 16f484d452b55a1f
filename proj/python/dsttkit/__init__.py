"""State transition tensors, rank-1 directional factorizations, and
Gaussian moment propagation along reference orbits."""

try:
    # Installed layout: the extension lives inside the package.
    from ._dsttkit import *  # noqa: F401,F403
    from ._dsttkit import __version__  # noqa: F401
except ImportError:
    # Build-tree layout: the extension sits on PYTHONPATH next to the
    # CMake outputs.
    from _dsttkit import *  # noqa: F401,F403
    from _dsttkit import __version__  # noqa: F401
