from abc import ABC, abstractmethod
from pathlib import Path
import json
import logging
from typing import Dict, List, Optional

from icgtm.errors import InvariantError, LoadError
from icgtm.models import (
    UNKNOWN,
    Correspondence,
    CorrespondenceSet,
    Descriptor,
    Homography,
    Keypoint,
    MatchResult,
)
from icgtm.utils.json_encoder import dumps

logger = logging.getLogger(__name__)

CORR_MAGIC = "MCORR"
RESULT_MAGIC = "MRES"
FORMAT_VERSION = 1
RECORD_FIELDS = 15
UNPOPULATED_RATIO = -1.0


# 1. Interface Repository
class CorrespondenceRepository(ABC):
    """Interface cho correspondence/result storage"""

    @abstractmethod
    def read_set(self, path: Path) -> CorrespondenceSet:
        pass

    @abstractmethod
    def write_set(self, cset: CorrespondenceSet, path: Path) -> None:
        pass

    @abstractmethod
    def read_result(self, path: Path) -> MatchResult:
        pass

    @abstractmethod
    def write_result(self, result: MatchResult, path: Path) -> None:
        pass


def _fmt(value: float) -> str:
    return repr(float(value))


def _build_item(index: int, xl, yl, al, xr, yr, ar, left_desc, right_desc, ratio) -> Correspondence:
    try:
        return Correspondence(
            index=index,
            left=Keypoint(xl, yl, tuple(al)),
            right=Keypoint(xr, yr, tuple(ar)),
            left_desc=Descriptor(tuple(left_desc)),
            right_desc=Descriptor(tuple(right_desc)),
            ratio=None if ratio == UNPOPULATED_RATIO else ratio,
        )
    except InvariantError as e:
        raise LoadError(str(e), index) from e


def _check_bounds(item: Correspondence, size_left, size_right):
    for kp, (w, h) in ((item.left, size_left), (item.right, size_right)):
        if not (0.0 <= kp.x <= w and 0.0 <= kp.y <= h):
            raise LoadError("position out of bounds", item.index)


def _assemble_set(items, labels, size_left, size_right, dim) -> CorrespondenceSet:
    for item in items:
        _check_bounds(item, size_left, size_right)
    truth = None
    if any(label != UNKNOWN for label in labels):
        truth = tuple((item.index, label) for item, label in zip(items, labels))
    try:
        return CorrespondenceSet(tuple(items), size_left, size_right, truth, dim)
    except InvariantError as e:
        raise LoadError(str(e)) from e


# 2. Implementation: line-oriented text records
class TextCorrespondenceRepository(CorrespondenceRepository):
    """MCORR / MRES text records"""

    @staticmethod
    def _content_lines(path: Path) -> List[str]:
        with open(path, "r", encoding="utf-8") as f:
            return [line.strip() for line in f]

    def read_set(self, path: Path) -> CorrespondenceSet:
        lines = [line for line in self._content_lines(path) if not line.startswith("#")]
        if not lines or not lines[0]:
            raise LoadError(f"{path}: empty correspondence file")

        header = lines[0].split()
        if len(header) != 8 or header[0] != CORR_MAGIC:
            raise LoadError(f"{path}: header must read '{CORR_MAGIC} 1 <count> <desc_dim> <wL> <hL> <wR> <hR>'")
        try:
            version, count, dim, wl, hl, wr, hr = (int(tok) for tok in header[1:])
        except ValueError as e:
            raise LoadError(f"{path}: non-integer header field") from e
        if version != FORMAT_VERSION:
            raise LoadError(f"{path}: unsupported format version {version}")

        tokens = " ".join(lines[1:]).split()
        record_size = RECORD_FIELDS + 2 * dim
        if len(tokens) != count * record_size:
            complete = len(tokens) // record_size if record_size else 0
            raise LoadError(f"{path}: header declares {count} records but {complete} complete records were found")

        items, labels = [], []
        for r in range(count):
            chunk = tokens[r * record_size:(r + 1) * record_size]
            try:
                index = int(chunk[0])
            except ValueError as e:
                raise LoadError("non-integer correspondence index", r) from e
            try:
                values = [float(tok) for tok in chunk[1:RECORD_FIELDS - 1]]
                label = int(chunk[RECORD_FIELDS - 1])
                descs = [float(tok) for tok in chunk[RECORD_FIELDS:]]
            except ValueError as e:
                raise LoadError(f"unparseable record field ({e})", index) from e
            items.append(_build_item(
                index,
                values[0], values[1], values[2:6],
                values[6], values[7], values[8:12],
                descs[:dim], descs[dim:], values[12],
            ))
            labels.append(label)

        logger.debug("Loaded %d correspondences from %s", count, path)
        return _assemble_set(items, labels, (wl, hl), (wr, hr), dim)

    def write_set(self, cset: CorrespondenceSet, path: Path) -> None:
        labels = cset.truth_labels()
        (wl, hl), (wr, hr) = cset.image_size_left, cset.image_size_right
        out = [f"{CORR_MAGIC} {FORMAT_VERSION} {len(cset)} {cset.descriptor_dim} {wl} {hl} {wr} {hr}"]
        for c, label in zip(cset.items, labels):
            ratio = UNPOPULATED_RATIO if c.ratio is None else c.ratio
            fields = [c.left.x, c.left.y, *c.left.affine, c.right.x, c.right.y, *c.right.affine, ratio]
            out.append(" ".join([str(c.index)] + [_fmt(v) for v in fields] + [str(int(label))]))
            out.append(" ".join(_fmt(v) for v in c.left_desc.values))
            out.append(" ".join(_fmt(v) for v in c.right_desc.values))
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(out) + "\n")

    def read_result(self, path: Path) -> MatchResult:
        lines = [line for line in self._content_lines(path) if line]
        body = [line for line in lines if not line.startswith("#")]
        if not body:
            raise LoadError(f"{path}: empty result file")
        header = body[0].split()
        if len(header) != 4 or header[0] != RESULT_MAGIC:
            raise LoadError(f"{path}: header must read '{RESULT_MAGIC} 1 <count> <K>'")
        try:
            version, count, k = (int(tok) for tok in header[1:])
        except ValueError as e:
            raise LoadError(f"{path}: non-integer header field") from e
        if version != FORMAT_VERSION:
            raise LoadError(f"{path}: unsupported format version {version}")
        if len(body) != 1 + k + count:
            raise LoadError(f"{path}: header declares {k} homographies and {count} labels, found {len(body) - 1} lines")

        homographies = []
        for line in body[1:1 + k]:
            try:
                homographies.append(Homography(tuple(float(tok) for tok in line.split())))
            except (ValueError, InvariantError) as e:
                raise LoadError(f"{path}: bad homography line ({e})") from e

        indices, labels = [], []
        for r, line in enumerate(body[1 + k:]):
            parts = line.split()
            try:
                idx, label = int(parts[0]), int(parts[1])
            except (ValueError, IndexError) as e:
                raise LoadError("bad label line", r) from e
            indices.append(idx)
            labels.append(label)

        diagnostics = {}
        for line in lines:
            parts = line.lstrip("#").split()
            if line.startswith("#") and len(parts) == 2:
                try:
                    diagnostics[parts[0]] = int(parts[1])
                except ValueError:
                    continue
        return MatchResult(tuple(indices), tuple(labels), tuple(homographies), diagnostics)

    def write_result(self, result: MatchResult, path: Path) -> None:
        out = [f"{RESULT_MAGIC} {FORMAT_VERSION} {len(result.labels)} {result.num_clusters}"]
        out += [" ".join(_fmt(v) for v in h.h) for h in result.homographies]
        out += [f"{idx} {label}" for idx, label in zip(result.indices, result.labels)]
        out += [f"# {key} {int(value)}" for key, value in sorted(result.diagnostics.items())]
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(out) + "\n")


# 3. Implementation: structured JSON documents
class JsonCorrespondenceRepository(CorrespondenceRepository):
    """Same fields as the text records, as one JSON document"""

    @staticmethod
    def _read_doc(path: Path, magic: str) -> Dict:
        try:
            with open(path, "r", encoding="utf-8") as f:
                doc = json.load(f)
        except json.JSONDecodeError as e:
            raise LoadError(f"{path}: invalid JSON ({e})") from e
        if not isinstance(doc, dict) or doc.get("format") != magic:
            raise LoadError(f"{path}: not a {magic} document")
        if doc.get("version") != FORMAT_VERSION:
            raise LoadError(f"{path}: unsupported format version {doc.get('version')}")
        return doc

    def read_set(self, path: Path) -> CorrespondenceSet:
        doc = self._read_doc(path, CORR_MAGIC)
        records = doc.get("correspondences", [])
        if doc.get("count", len(records)) != len(records):
            raise LoadError(f"{path}: declared count {doc.get('count')} but found {len(records)} records")
        items, labels = [], []
        for r, rec in enumerate(records):
            try:
                ratio = rec.get("ratio")
                items.append(_build_item(
                    int(rec["index"]),
                    float(rec["left"]["x"]), float(rec["left"]["y"]), rec["left"]["affine"],
                    float(rec["right"]["x"]), float(rec["right"]["y"]), rec["right"]["affine"],
                    rec["left_desc"], rec["right_desc"],
                    UNPOPULATED_RATIO if ratio is None else float(ratio),
                ))
                labels.append(int(rec.get("gt_label", UNKNOWN)))
            except (KeyError, TypeError, ValueError) as e:
                if isinstance(e, LoadError):
                    raise
                raise LoadError(f"malformed record ({e})", r) from e
        try:
            dim = int(doc.get("descriptor_dim", 0))
            size_left = tuple(int(v) for v in doc["image_size_left"])
            size_right = tuple(int(v) for v in doc["image_size_right"])
        except (KeyError, TypeError, ValueError) as e:
            raise LoadError(f"{path}: malformed header ({e})") from e
        if len(size_left) != 2 or len(size_right) != 2:
            raise LoadError(f"{path}: image sizes need a width and a height")
        for item in items:
            if item.left_desc.dim != dim:
                raise LoadError("descriptor dimension mismatch", item.index)
        return _assemble_set(items, labels, size_left, size_right, dim)

    def write_set(self, cset: CorrespondenceSet, path: Path) -> None:
        labels = cset.truth_labels()
        doc = {
            "format": CORR_MAGIC,
            "version": FORMAT_VERSION,
            "count": len(cset),
            "descriptor_dim": cset.descriptor_dim,
            "image_size_left": list(cset.image_size_left),
            "image_size_right": list(cset.image_size_right),
            "correspondences": [
                {
                    "index": c.index,
                    "left": {"x": c.left.x, "y": c.left.y, "affine": list(c.left.affine)},
                    "right": {"x": c.right.x, "y": c.right.y, "affine": list(c.right.affine)},
                    "left_desc": list(c.left_desc.values),
                    "right_desc": list(c.right_desc.values),
                    "ratio": c.ratio,
                    "gt_label": int(label),
                }
                for c, label in zip(cset.items, labels)
            ],
        }
        with open(path, "w", encoding="utf-8") as f:
            f.write(dumps(doc))

    def read_result(self, path: Path) -> MatchResult:
        doc = self._read_doc(path, RESULT_MAGIC)
        try:
            homographies = tuple(Homography(tuple(h)) for h in doc.get("homographies", []))
            entries = doc.get("labels", [])
            indices = tuple(int(e["index"]) for e in entries)
            labels = tuple(int(e["label"]) for e in entries)
        except (KeyError, TypeError, ValueError, InvariantError) as e:
            raise LoadError(f"{path}: malformed result ({e})") from e
        return MatchResult(indices, labels, homographies, dict(doc.get("diagnostics", {})))

    def write_result(self, result: MatchResult, path: Path) -> None:
        doc = {
            "format": RESULT_MAGIC,
            "version": FORMAT_VERSION,
            "homographies": [list(h.h) for h in result.homographies],
            "labels": [{"index": i, "label": l} for i, l in zip(result.indices, result.labels)],
            "diagnostics": dict(sorted(result.diagnostics.items())),
        }
        with open(path, "w", encoding="utf-8") as f:
            f.write(dumps(doc))


# 4. Service
class CorrespondenceService:
    def __init__(self, text_repository: Optional[CorrespondenceRepository] = None,
                 json_repository: Optional[CorrespondenceRepository] = None):
        self._text = text_repository or TextCorrespondenceRepository()
        self._json = json_repository or JsonCorrespondenceRepository()

    def _repository_for(self, path) -> CorrespondenceRepository:
        return self._json if str(path).lower().endswith(".json") else self._text

    def load_correspondences(self, path) -> CorrespondenceSet:
        path = Path(path)
        if not path.exists():
            raise LoadError(f"{path}: file not found")
        return self._repository_for(path).read_set(path)

    def save_correspondences(self, cset: CorrespondenceSet, path) -> None:
        self._repository_for(path).write_set(cset, Path(path))

    def load_result(self, path) -> MatchResult:
        path = Path(path)
        if not path.exists():
            raise LoadError(f"{path}: file not found")
        result = self._repository_for(path).read_result(path)
        try:
            result.validate()
        except InvariantError as e:
            raise LoadError(f"{path}: {e}") from e
        return result

    def save_result(self, result: MatchResult, path) -> None:
        result.validate()
        self._repository_for(path).write_result(result, Path(path))


# Public API
_service = CorrespondenceService()

def load_correspondences(path) -> CorrespondenceSet:
    return _service.load_correspondences(path)

def save_correspondences(cset: CorrespondenceSet, path) -> None:
    _service.save_correspondences(cset, path)

def load_result(path) -> MatchResult:
    return _service.load_result(path)

def save_result(result: MatchResult, path) -> None:
    _service.save_result(result, path)
