"""Hermite activation spectra, edge-of-chaos diagnostics, and DeepESN evolution."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
