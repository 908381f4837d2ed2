"""Side-by-side SVG overlay of correspondences coloured by cluster."""
import logging
from collections import Counter

import matplotlib
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure
from matplotlib.lines import Line2D
from matplotlib.patches import Rectangle

from icgtm.errors import InvariantError
from icgtm.models import OUTLIER, UNASSIGNED, CorrespondenceSet, MatchResult

logger = logging.getLogger(__name__)

PALETTE = (
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#bfef45",
    "#469990", "#9a6324", "#800000", "#808000", "#000075", "#fabed4", "#dcbeff", "#aaffc3",
)
OUTLIER_COLOR = "#000000"
UNASSIGNED_COLOR = "#6b6b6b"
FRAME_COLOR = "#b0b0b0"
GAP_SHARE = 0.05

# Fixed salt and no timestamp keep the SVG byte-identical across runs.
_SVG_RC = {"svg.hashsalt": "icgtm", "svg.fonttype": "none"}


def color_for(label: int) -> str:
    if label == OUTLIER:
        return OUTLIER_COLOR
    if label == UNASSIGNED:
        return UNASSIGNED_COLOR
    return PALETTE[label % len(PALETTE)]


def _legend_name(label: int) -> str:
    if label == OUTLIER:
        return "outlier"
    if label == UNASSIGNED:
        return "inlier"
    return f"cluster {label}"


def render_overlay(cset: CorrespondenceSet, result: MatchResult, out, width: float = 12.0) -> None:
    """Write the overlay to ``out`` (a path or a binary file object)."""
    if len(cset) != len(result.labels):
        raise InvariantError(f"count mismatch: {len(cset)} correspondences but {len(result.labels)} labels")
    label_of = result.label_map()
    missing = [idx for idx in cset.indices.tolist() if idx not in label_of]
    if missing:
        raise InvariantError(f"result has no label for correspondence {missing[0]}")

    (wl, hl), (wr, hr) = cset.image_size_left, cset.image_size_right
    offset = wl + GAP_SHARE * max(wl, wr)
    total_w, total_h = offset + wr, max(hl, hr)

    segments = {}
    for c in cset.items:
        label = label_of[c.index]
        segments.setdefault(label, []).append([(c.left.x, c.left.y), (c.right.x + offset, c.right.y)])
    counts = Counter({label: len(segs) for label, segs in segments.items()})

    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(width, width * total_h / total_w + 0.6))
        ax = fig.add_axes([0.01, 0.08, 0.98, 0.9])
        for x0, w, h in ((0.0, wl, hl), (offset, wr, hr)):
            ax.add_patch(Rectangle((x0, 0.0), w, h, fill=False, edgecolor=FRAME_COLOR, linewidth=1.0))

        # outliers underneath, clusters in id order on top
        order = sorted(segments, key=lambda l: (l >= 0, l))
        for label in order:
            ax.add_collection(LineCollection(segments[label], colors=color_for(label), linewidths=0.6))

        if segments:
            handles = [Line2D([], [], color=color_for(l), label=f"{_legend_name(l)} ({counts[l]})")
                       for l in sorted(segments, key=lambda l: (l < 0, abs(l)))]
            fig.legend(handles=handles, loc="lower center",
                       ncol=min(len(handles), 6), fontsize=8, frameon=False)

        ax.set_xlim(0.0, total_w)
        ax.set_ylim(total_h, 0.0)
        ax.set_aspect("equal")
        ax.axis("off")
        fig.savefig(out, format="svg", metadata={"Date": None})
    logger.info("Rendered %d correspondences in %d groups", len(cset), len(segments))
