import six

PY2 = six.PY2
