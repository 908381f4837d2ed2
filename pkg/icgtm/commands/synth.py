import click

from icgtm.config import SynthConfig
from icgtm.middleware.exit_codes import with_exit_codes
from icgtm.services.correspondence_service import save_correspondences, save_result
from icgtm.services.scene_service import generate_scene

_default = SynthConfig()


def _opt(*decls, **attrs):
    attrs.setdefault("show_default", True)
    return click.option(*decls, **attrs)


@click.command("synth")
@click.argument("output_path", type=click.Path(dir_okay=False, writable=True))
@_opt("--k", "k", type=int, default=_default.k, help="Number of consistencies.")
@_opt("--inliers-per", type=int, default=_default.inliers_per, help="Inliers per consistency.")
@_opt("--outlier-ratio", type=float, default=_default.outlier_ratio, help="Share of outliers in the whole set.")
@_opt("--noise-sigma", type=float, default=_default.noise_sigma, help="Right keypoint noise in pixels.")
@_opt("--image-width", type=int, default=_default.image_size[0], help="Image width in pixels.")
@_opt("--image-height", type=int, default=_default.image_size[1], help="Image height in pixels.")
@_opt("--descriptor-dim", type=int, default=_default.descriptor_dim, help="Descriptor length.")
@_opt("--seed", type=int, default=_default.seed, help="Generator seed.")
@_opt("--rotation-max-deg", type=float, default=_default.rotation_max_deg, help="Largest planted rotation.")
@_opt("--scale-min", type=float, default=_default.scale_range[0], help="Smallest planted scale.")
@_opt("--scale-max", type=float, default=_default.scale_range[1], help="Largest planted scale.")
@_opt("--projective-max", type=float, default=_default.projective_max, help="Largest projective coefficient.")
@_opt("--descriptor-spread", type=float, default=_default.descriptor_spread,
      help="Descriptor spread around a consistency anchor.")
@_opt("--descriptor-noise", type=float, default=_default.descriptor_noise, help="Left-to-right descriptor noise.")
@_opt("--sidecar", type=click.Path(dir_okay=False, writable=True), default=None,
      help="Planted result path; defaults to OUTPUT_PATH.planted.mres.")
@with_exit_codes
def synth_command(output_path, k, inliers_per, outlier_ratio, noise_sigma, image_width, image_height,
                  descriptor_dim, seed, rotation_max_deg, scale_min, scale_max, projective_max,
                  descriptor_spread, descriptor_noise, sidecar):
    """Write a synthetic scene to OUTPUT_PATH plus its planted homographies."""
    cfg = SynthConfig(
        k=k,
        inliers_per=inliers_per,
        outlier_ratio=outlier_ratio,
        noise_sigma=noise_sigma,
        image_size=(image_width, image_height),
        descriptor_dim=descriptor_dim,
        seed=seed,
        rotation_max_deg=rotation_max_deg,
        scale_range=(scale_min, scale_max),
        projective_max=projective_max,
        descriptor_spread=descriptor_spread,
        descriptor_noise=descriptor_noise,
    )
    scene = generate_scene(cfg)
    sidecar = sidecar or f"{output_path}.planted.mres"
    save_correspondences(scene.correspondences, output_path)
    save_result(scene.planted_result(), sidecar)
    click.echo(f"wrote {len(scene.correspondences)} correspondences to {output_path}")
    click.echo(f"wrote {len(scene.planted)} planted homographies to {sidecar}")
