import requests


def pool():
    import urllib3

    return urllib3.PoolManager()
