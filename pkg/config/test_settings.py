from .settings import *  # noqa: F403,F401


CURVEFLOW_OUTPUT = ""

for _logger in LOGGING["loggers"].values():  # noqa: F405
    _logger["level"] = "WARNING"
