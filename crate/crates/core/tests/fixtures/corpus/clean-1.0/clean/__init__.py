import os

import requests
import yaml

from .util import helper

try:
    from yaml import CLoader as Loader
except ImportError:
    from yaml import Loader
