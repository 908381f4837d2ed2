import numpy as np
import pytest
from click.testing import CliRunner

from icgtm import create_cli
from icgtm.config import SynthConfig
from icgtm.models import Correspondence, CorrespondenceSet, Descriptor, Keypoint
from icgtm.services.scene_service import generate_scene


def make_correspondence(index, left, right, affine=(1.0, 0.0, 0.0, 1.0), desc=None, right_desc=None, ratio=None):
    desc = tuple(desc) if desc is not None else (float(index), 0.0, 1.0)
    right_desc = tuple(right_desc) if right_desc is not None else desc
    return Correspondence(
        index=index,
        left=Keypoint(float(left[0]), float(left[1]), tuple(affine)),
        right=Keypoint(float(right[0]), float(right[1]), (1.0, 0.0, 0.0, 1.0)),
        left_desc=Descriptor(desc),
        right_desc=Descriptor(right_desc),
        ratio=ratio,
    )


def random_set(rng, n, size=(200, 150), dim=8, with_ratios=True):
    """Correspondences with random positions, frames and descriptors."""
    items = []
    for i in range(n):
        theta, scale = rng.uniform(-np.pi, np.pi), rng.uniform(0.5, 2.0)
        c, s = np.cos(theta), np.sin(theta)
        items.append(make_correspondence(
            i,
            rng.uniform(0, 1, 2) * size,
            rng.uniform(0, 1, 2) * size,
            affine=(scale * c, -scale * s, scale * s, scale * c),
            desc=rng.normal(size=dim),
            right_desc=rng.normal(size=dim),
            ratio=float(rng.uniform(0, 1)) if with_ratios else None,
        ))
    return CorrespondenceSet(tuple(items), size, size)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_scene():
    return generate_scene(SynthConfig(k=2, inliers_per=40, outlier_ratio=0.3, descriptor_dim=16, seed=3))


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def cli():
    return create_cli()
