import numpy
import six
