import json


def helper():
    import urllib3

    return urllib3.PoolManager()
