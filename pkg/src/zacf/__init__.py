"""Zero-aliasing correlation filters.

Conventional frequency-domain correlation filters (MACE, OTSDF, MOSSE,
MMCF), their zero-aliasing counterparts, proximal-gradient solvers,
brute-force spatial oracles and an evaluation harness.
"""

from .constraints import *  # noqa: F401,F403
from .designs import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .evaluation import *  # noqa: F401,F403
from .prox import *  # noqa: F401,F403
from .spectral import *  # noqa: F401,F403
from . import data, io, oracle, protocols  # noqa: F401

__version__ = "0.1.0"
