import logging
import sys

import click
from dotenv import load_dotenv

from icgtm.config import load_config_file
from icgtm.errors import ConfigError
from icgtm.middleware.exit_codes import EXIT_OK, EXIT_USAGE

# Load environment variables from .env file
load_dotenv()

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


class IcgtmGroup(click.Group):
    """Root group that reports usage errors with exit code 1."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
            code = rv if isinstance(rv, int) else EXIT_OK
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            code = EXIT_USAGE
        except click.ClickException as e:
            e.show()
            code = EXIT_USAGE
        if standalone_mode:
            sys.exit(code)
        return code


def _apply_config_file(ctx, param, value):
    if not value:
        return value
    try:
        values = load_config_file(value)
    except ConfigError as e:
        raise click.BadParameter(str(e), ctx=ctx, param=param)
    # flat keys serve the root options and every subcommand
    ctx.default_map = {**values, **{name: dict(values) for name in ctx.command.list_commands(ctx)}}
    return value


def create_cli():
    """Command factory for the matcher CLI."""

    @click.group(cls=IcgtmGroup)
    @click.option("--config", type=click.Path(dir_okay=False), callback=_apply_config_file,
                  is_eager=True, expose_value=False, help="File of 'key = value' option defaults.")
    @click.option("--log-level", envvar="ICGTM_LOG_LEVEL", type=click.Choice(LOG_LEVELS, case_sensitive=False),
                  default="WARNING", show_default=True, help="Logging level on standard error.")
    @click.option("--threads", envvar="ICGTM_THREADS", type=click.IntRange(min=1), default=None,
                  show_default=True, help="Worker threads for the local games (default 1).")
    @click.pass_context
    def cli(ctx, log_level, threads):
        """Multi-consistency correspondence selection."""
        logging.basicConfig(
            level=log_level.upper(),
            stream=sys.stderr,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
            force=True,
        )
        ctx.obj = {"threads": threads}

    # register commands
    from icgtm.commands.match import match_command
    from icgtm.commands.evaluate import eval_command
    from icgtm.commands.synth import synth_command
    from icgtm.commands.render import render_command

    cli.add_command(match_command)
    cli.add_command(eval_command)
    cli.add_command(synth_command)
    cli.add_command(render_command)
    return cli


def main():
    create_cli()()
