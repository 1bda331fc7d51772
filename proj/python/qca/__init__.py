"""Grand-canonical continuum gas and its quasi-continuous approximation."""

from ._qca import *  # noqa: F401,F403
from ._qca import InvalidArgument, NumericalRejection  # noqa: F401
