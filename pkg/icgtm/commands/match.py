import logging
from pathlib import Path

import click

from icgtm.config import ClusterConfig, GameConfig, GridConfig, PayoffMode, PayoffParams, RunConfig
from icgtm.middleware.exit_codes import with_exit_codes
from icgtm.services.correspondence_service import load_correspondences, save_result
from icgtm.services.pipeline_service import run_method
from icgtm.utils.timing import StageTimer

logger = logging.getLogger(__name__)

_defaults = {
    "grid": GridConfig(),
    "payoff": PayoffParams(),
    "game": GameConfig(),
    "cluster": ClusterConfig(),
}


def _opt(*decls, **attrs):
    attrs.setdefault("show_default", True)
    return click.option(*decls, **attrs)


@click.command("match")
@click.argument("input_path", type=click.Path(dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False, writable=True))
@_opt("--method", type=click.Choice(["icgtm", "gtm", "ransac"]), default="icgtm", help="Selection method.")
@_opt("--grid-rows", type=int, default=_defaults["grid"].rows, help="Grid rows per image.")
@_opt("--grid-cols", type=int, default=_defaults["grid"].cols, help="Grid columns per image.")
@_opt("--min-count", type=int, default=_defaults["grid"].min_count, help="Minimum correspondences for a block pair.")
@_opt("--mutual-best/--no-mutual-best", default=_defaults["grid"].mutual_best,
      help="Keep a block pair only when the pairing is best in both directions.")
@_opt("--payoff-mode", type=click.Choice([m.value for m in PayoffMode]), default=_defaults["payoff"].mode.value,
      help="Payoff function.")
@_opt("--sigma", type=float, default=_defaults["payoff"].sigma, help="Geometric payoff scale in pixels.")
@_opt("--alpha", type=float, default=_defaults["payoff"].alpha, help="Ratio-test payoff scale.")
@_opt("--beta", type=float, default=None, help="Descriptor payoff scale; half the median match distance when unset.")
@_opt("--literal-projection/--offset-projection", default=_defaults["payoff"].literal_projection,
      help="Project with A*k + k_j instead of the offset form.")
@_opt("--max-iters", type=int, default=_defaults["game"].max_iters, help="Replicator iteration cap.")
@_opt("--tol", type=float, default=_defaults["game"].tol, help="Replicator convergence tolerance.")
@_opt("--otsu-bins", type=int, default=_defaults["game"].otsu_bins, help="Histogram bins for the popularity threshold.")
@_opt("--min-cluster-size", type=int, default=_defaults["cluster"].min_cluster_size, help="Smallest cluster kept.")
@_opt("--reproj-threshold", type=float, default=_defaults["cluster"].reproj_threshold,
      help="Reprojection threshold t in pixels for inlier recovery.")
@_opt("--ransac-iters", type=int, default=_defaults["cluster"].ransac_iters, help="RANSAC hypotheses per cluster.")
@_opt("--ransac-tol", type=float, default=_defaults["cluster"].ransac_tol, help="RANSAC consensus tolerance in pixels.")
@_opt("--max-outer-rounds", type=int, default=_defaults["cluster"].max_outer_rounds,
      help="Extraction rounds per pass.")
@_opt("--membership", type=click.Choice(["both", "either"]), default=_defaults["cluster"].membership,
      help="Anchor endpoints a member must be compatible with.")
@_opt("--min-support", type=int, default=_defaults["cluster"].min_support,
      help="Clusters recovering fewer correspondences are dropped.")
@_opt("--reiterate/--no-reiterate", default=_defaults["cluster"].reiterate,
      help="Rerun blocks and games on unexplained correspondences.")
@_opt("--max-passes", type=int, default=_defaults["cluster"].max_passes, help="Pass cap when reiterating.")
@_opt("--drop-redundant/--keep-redundant", default=_defaults["cluster"].drop_redundant,
      help="Discard groups whose fit repeats an accepted transformation.")
@_opt("--seed", type=int, default=_defaults["cluster"].seed, help="RANSAC seed.")
@_opt("--skip-clustering", is_flag=True, default=False, help="Stop after the local games.")
@click.pass_context
@with_exit_codes
def match_command(ctx, input_path, output_path, method, grid_rows, grid_cols, min_count, mutual_best,
                  payoff_mode, sigma, alpha, beta, literal_projection, max_iters, tol, otsu_bins,
                  min_cluster_size, reproj_threshold, ransac_iters, ransac_tol, max_outer_rounds,
                  membership, min_support, reiterate, max_passes, drop_redundant, seed, skip_clustering):
    """Select correspondences from INPUT_PATH and write labels to OUTPUT_PATH."""
    cfg = RunConfig(
        grid=GridConfig(grid_rows, grid_cols, min_count, mutual_best),
        payoff=PayoffParams(sigma, alpha, beta, PayoffMode(payoff_mode), literal_projection),
        game=GameConfig(max_iters, tol, otsu_bins),
        cluster=ClusterConfig(
            min_cluster_size=min_cluster_size,
            reproj_threshold=reproj_threshold,
            ransac_iters=ransac_iters,
            ransac_tol=ransac_tol,
            max_outer_rounds=max_outer_rounds,
            membership=membership,
            min_support=min_support,
            reiterate=reiterate,
            max_passes=max_passes,
            drop_redundant=drop_redundant,
            seed=seed,
        ),
        skip_clustering=skip_clustering,
        method=method,
        threads=(ctx.obj or {}).get("threads"),
        input_path=Path(input_path),
        output_path=Path(output_path),
    )

    timer = StageTimer()
    with timer.stage("load"):
        cset = load_correspondences(cfg.input_path)
    result = run_method(cset, cfg, timer)
    with timer.stage("save"):
        save_result(result, cfg.output_path)

    for key, value in result.diagnostics.items():
        click.echo(f"{key.replace('_', ' ')}: {value}")
    click.echo("stage timings:")
    click.echo(timer.report())
