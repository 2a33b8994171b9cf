import requests
import yaml

try:
    import ujson as json
except ImportError:
    import json
