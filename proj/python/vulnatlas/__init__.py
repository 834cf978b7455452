"""Tract-level climate vulnerability assessment (C++ core)."""

from ._core import *  # noqa: F401,F403
from ._core import VulnatlasError, __version__  # noqa: F401
