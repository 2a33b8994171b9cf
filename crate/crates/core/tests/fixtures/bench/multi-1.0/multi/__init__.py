import multipart
