import celery

app = celery.Celery('claripy')
