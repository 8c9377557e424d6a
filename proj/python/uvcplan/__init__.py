"""UV-C disinfection robot toolkit.

Lengths in m, times in s, irradiance in uW/cm^2, dose in mJ/cm^2.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__version__ = "1.0.0"
