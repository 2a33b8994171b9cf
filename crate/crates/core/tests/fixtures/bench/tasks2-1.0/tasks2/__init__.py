import celery
import six
