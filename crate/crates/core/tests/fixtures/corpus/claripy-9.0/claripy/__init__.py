import six
from . import backends
