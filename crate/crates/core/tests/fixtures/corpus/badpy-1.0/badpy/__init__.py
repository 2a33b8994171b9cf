import oldlib
