import click

from icgtm.middleware.exit_codes import with_exit_codes
from icgtm.services.correspondence_service import load_correspondences, load_result
from icgtm.utils.svg import render_overlay


@click.command("render")
@click.argument("correspondences_path", type=click.Path(dir_okay=False))
@click.argument("result_path", type=click.Path(dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False, writable=True))
@click.option("--width", type=click.FloatRange(min=1.0), default=12.0, show_default=True,
              help="Figure width in inches.")
@with_exit_codes
def render_command(correspondences_path, result_path, output_path, width):
    """Draw every correspondence of CORRESPONDENCES_PATH coloured by RESULT_PATH."""
    cset = load_correspondences(correspondences_path)
    result = load_result(result_path)
    render_overlay(cset, result, output_path, width)
    click.echo(f"wrote {output_path}")
