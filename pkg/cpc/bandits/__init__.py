from .exceptions import BanditsError, ConfigError, ConsistencyError

__version__ = 'v0.1.0'

# Make submodules available when just importing the top-level package
from . import rng
from . import env
from . import numeric
from . import datasets
from . import policies
from . import rimab
from . import harness
from . import loading
from . import writing
from . import validation
from . import cli
