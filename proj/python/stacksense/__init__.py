"""OS fingerprinting with neural classifiers."""

from ._stacksense import *  # noqa: F401,F403
from ._stacksense import __doc__  # noqa: F401
