"""Repeated-averaging wealth exchange: limit PDE, particle systems, inequality metrics."""

from ._core import *  # noqa: F401,F403
from ._core import KinexchError, __doc__  # noqa: F401
