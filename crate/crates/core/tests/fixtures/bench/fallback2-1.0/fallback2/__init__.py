try:
    import simplejson as json
except ImportError:
    import ujson as json
