"""Figure regeneration for ovsde result files."""

__version__ = "0.1.0"

from .figures import FIGURES, ContainmentError, render  # noqa: F401
from .io import InputError  # noqa: F401
