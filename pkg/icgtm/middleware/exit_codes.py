"""
Exit-code mapping for CLI commands

  0  success
  1  usage error or bad configuration
  2  data error (unreadable input, broken invariants, missing truth)
  3  pipeline failure
"""
from functools import wraps
import logging

import click

from icgtm.errors import ConfigError, InvariantError, LoadError, MetricError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PIPELINE = 3


def _fail(code: int, message: str):
    click.echo(f"Error: {message}", err=True)
    click.get_current_context().exit(code)


def with_exit_codes(f):
    """
    Decorator turning domain exceptions raised by a command into exit codes.

    Usage:
        @click.command("match")
        @with_exit_codes
        def match_command(...):
            ...
    """
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (click.exceptions.Exit, click.ClickException):
            raise
        except ConfigError as e:
            _fail(EXIT_USAGE, str(e))
        except (LoadError, InvariantError, MetricError) as e:
            _fail(EXIT_DATA, str(e))
        except OSError as e:
            _fail(EXIT_DATA, f"{e.strerror or e} ({e.filename})" if e.filename else str(e))
        except Exception as e:
            logger.debug("Pipeline failure", exc_info=True)
            _fail(EXIT_PIPELINE, str(e) or e.__class__.__name__)
    return decorated_function
