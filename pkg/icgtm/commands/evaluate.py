from pathlib import Path

import click

from icgtm.config import RunConfig
from icgtm.middleware.exit_codes import with_exit_codes
from icgtm.services.correspondence_service import load_correspondences, load_result
from icgtm.services.metric_service import evaluate


@click.command("eval")
@click.argument("result_path", type=click.Path(dir_okay=False))
@click.argument("truth_path", type=click.Path(dir_okay=False))
@click.option("--paper-literal-f/--standard-f", default=False, show_default=True,
              help="Use P*R/(P+R) instead of the harmonic mean.")
@click.option("--machine-only", is_flag=True, default=False, show_default=True,
              help="Print only the key=value block.")
@with_exit_codes
def eval_command(result_path, truth_path, paper_literal_f, machine_only):
    """Score RESULT_PATH against the ground truth stored in TRUTH_PATH."""
    cfg = RunConfig(paper_literal_f=paper_literal_f, input_path=Path(truth_path), output_path=Path(result_path))
    result = load_result(cfg.output_path)
    cset = load_correspondences(cfg.input_path)
    report = evaluate(result, cset, cfg.paper_literal_f)
    if not machine_only:
        click.echo(report.to_table())
        click.echo("")
    click.echo(report.to_kv())
