"""Wright-Fisher graphs with selection and extreme reproductive events."""

from ._xiwf import *  # noqa: F401,F403
from ._xiwf import __doc__  # noqa: F401
