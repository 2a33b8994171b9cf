from setuptools import setup

with open("README.rst") as f:
    long_description = f.read()

setup(long_description=long_description)
