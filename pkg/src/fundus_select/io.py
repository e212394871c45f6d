"""File formats: run-record and prediction CSVs, manifest JSON, PPM/PAM images,
and the bundled fixtures."""

from __future__ import annotations

import csv
import io
import json
import re
from importlib import resources
from pathlib import Path

import numpy as np

from .datasetplan import AugmentationPlan, ClassSource, DatasetManifest, ManifestEntry, SplitSpec
from .metrics import Label, MetricSet, PredictionRecord
from .ranking import RunRecord
from .validation import ValidationError, check_image

__all__ = [
    "RUN_HEADER",
    "PREDICTION_HEADER",
    "VERIFICATION_HEADER",
    "FIXTURE_FILES",
    "parse_decimal",
    "read_runs",
    "load_runs",
    "write_runs",
    "load_predictions",
    "write_predictions",
    "load_verification",
    "fixture_path",
    "fixture_text",
    "write_fixtures",
    "manifest_to_json",
    "manifest_from_json",
    "load_plan_config",
    "read_pnm",
    "write_ppm",
    "write_pam",
]

RUN_HEADER = ("model", "overfitting", "val_accuracy", "val_loss", "sensitivity", "specificity", "params")
PREDICTION_HEADER = ("example_id", "true_label", "p_healthy", "p_diseased")
VERIFICATION_HEADER = ("split", "accuracy", "sensitivity", "specificity")

FIXTURE_FILES = ("table1_runs.csv", "table2_runs.csv", "baseline.csv", "verification.csv")

_DECIMAL = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
_INTEGER = re.compile(r"\d+")


def parse_decimal(text: str, what: str = "value") -> float:
    """Parse a ``.``-separated decimal literal; commas, nan and inf are rejected."""
    if not _DECIMAL.fullmatch(text):
        raise ValidationError(f"{what}: {text!r} is not a decimal number")
    return float(text)


def _check_header(found, expected, source) -> None:
    if tuple(found or ()) != expected:
        raise ValidationError(
            f"{source}: header mismatch; expected {','.join(expected)!r}, "
            f"found {','.join(found or ())!r}"
        )


def read_runs(text: str, source: str = "<runs>") -> list:
    reader = csv.reader(io.StringIO(text))
    _check_header(next(reader, None), RUN_HEADER, source)
    records = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(RUN_HEADER):
            raise ValidationError(f"{source}:{line}: expected {len(RUN_HEADER)} fields, got {len(row)}")
        try:
            values = [parse_decimal(v, RUN_HEADER[i + 1]) for i, v in enumerate(row[1:6])]
            params = row[6].strip()
            if params and not _INTEGER.fullmatch(params):
                raise ValidationError(f"params: {params!r} is not a non-negative integer")
            records.append(RunRecord(row[0], MetricSet(*values), int(params) if params else None))
        except ValidationError as exc:
            raise ValidationError(f"{source}:{line}: {exc}") from None
    if not records:
        raise ValidationError(f"{source}: no records")
    return records


def load_runs(path) -> list:
    path = Path(path)
    return read_runs(path.read_text(encoding="utf-8"), str(path))


def write_runs(records, path=None) -> str:
    """Serialize records with ``repr`` floats so loading gives them back exactly."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUN_HEADER)
    for r in records:
        m = r.metrics
        writer.writerow(
            [r.model_name, *(repr(v) for v in m.as_tuple()), "" if r.param_count is None else str(r.param_count)]
        )
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_predictions(path) -> list:
    path = Path(path)
    reader = csv.reader(io.StringIO(path.read_text(encoding="utf-8")))
    _check_header(next(reader, None), PREDICTION_HEADER, str(path))
    records = []
    for row in reader:
        if not row:
            continue
        if len(row) != 4:
            raise ValidationError(f"{path}:{reader.line_num}: expected 4 fields, got {len(row)}")
        try:
            records.append(
                PredictionRecord(
                    row[0], row[1], parse_decimal(row[2], "p_healthy"), parse_decimal(row[3], "p_diseased")
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"{path}:{reader.line_num}: {exc}") from None
    if not records:
        raise ValidationError(f"{path}: no records")
    return records


def write_predictions(records, path) -> None:
    lines = [",".join(PREDICTION_HEADER)]
    for r in records:
        lines.append(f"{r.example_id},{r.true_label.value},{r.p_healthy!r},{r.p_diseased!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_verification(path) -> tuple:
    """Return ``(val_triple, test_triple)`` from a verification CSV."""
    path = Path(path)
    reader = csv.reader(io.StringIO(path.read_text(encoding="utf-8")))
    _check_header(next(reader, None), VERIFICATION_HEADER, str(path))
    rows = {}
    for row in reader:
        if not row:
            continue
        if len(row) != 4 or row[0] not in ("val", "test"):
            raise ValidationError(f"{path}:{reader.line_num}: expected 'val' or 'test' row with 3 values")
        rows[row[0]] = tuple(parse_decimal(v, VERIFICATION_HEADER[i + 1]) for i, v in enumerate(row[1:]))
    if set(rows) != {"val", "test"}:
        raise ValidationError(f"{path}: needs exactly one 'val' and one 'test' row")
    return rows["val"], rows["test"]


def fixture_path(name: str):
    if name not in FIXTURE_FILES:
        raise ValidationError(f"unknown fixture {name!r}; available: {', '.join(FIXTURE_FILES)}")
    return resources.files("fundus_select").joinpath("data", name)


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")


def write_fixtures(directory) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name in FIXTURE_FILES:
        target = directory / name
        target.write_text(fixture_text(name), encoding="utf-8")
        written.append(target)
    return written


def manifest_to_json(manifest: DatasetManifest) -> str:
    doc = {
        "seed": manifest.seed,
        "generator": manifest.generator,
        "spec": {"train": manifest.spec.train, "val": manifest.spec.val, "test": manifest.spec.test},
        "entries": [
            {"ref": e.ref, "label": e.label.value, "source": e.source, "split": e.split}
            for e in manifest.entries
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


def manifest_from_json(text: str) -> DatasetManifest:
    doc = json.loads(text)
    try:
        entries = tuple(
            ManifestEntry(e["ref"], Label.parse(e["label"]), e["source"], e["split"]) for e in doc["entries"]
        )
        return DatasetManifest(entries, doc["seed"], SplitSpec(**doc["spec"]), doc["generator"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"invalid manifest: {exc}") from None


def load_plan_config(path) -> list:
    """Read ``{"sources": [{"name", "label", "count", "b", "c"}, ...]}``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    pairs = []
    try:
        for item in doc["sources"]:
            pairs.append(
                (
                    ClassSource(item["name"], item["label"], item["count"]),
                    AugmentationPlan(item.get("b", 1), item.get("c", 0)),
                )
            )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: invalid plan config: {exc}") from None
    return pairs


# -- PPM / PAM ---------------------------------------------------------------


def _pnm_tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValidationError("truncated PNM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def _read_pam(data: bytes) -> np.ndarray:
    header = {}
    pos = 3
    while True:
        end = data.find(b"\n", pos)
        if end < 0:
            raise ValidationError("PAM header has no ENDHDR")
        line = data[pos:end].strip()
        pos = end + 1
        if not line or line.startswith(b"#"):
            continue
        if line == b"ENDHDR":
            break
        key, _, value = line.partition(b" ")
        header[key.decode("ascii")] = value.strip().decode("ascii")
    try:
        w, h, depth, maxval = (int(header[k]) for k in ("WIDTH", "HEIGHT", "DEPTH", "MAXVAL"))
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"bad PAM header: {exc}") from None
    if maxval != 255:
        raise ValidationError(f"only MAXVAL 255 is supported, got {maxval}")
    if depth not in (3, 4):
        raise ValidationError(f"PAM DEPTH must be 3 or 4, got {depth}")
    return _raster(data, pos, h, w, depth)


def _raster(data, pos, h, w, c):
    n = h * w * c
    if len(data) - pos < n:
        raise ValidationError(f"raster truncated: need {n} bytes, have {len(data) - pos}")
    return np.frombuffer(data, dtype=np.uint8, count=n, offset=pos).reshape(h, w, c).copy()


def read_pnm(path) -> np.ndarray:
    """Read a binary PPM (``P6``) or PAM (``P7``) file with maxval 255."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic == b"P7":
        return _read_pam(data)
    if magic != b"P6":
        raise ValidationError(f"{path}: unsupported image format (magic {magic!r})")
    tokens, pos = _pnm_tokens(data, 3, 2)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ValidationError(f"{path}: bad PPM header") from None
    if maxval != 255:
        raise ValidationError(f"{path}: only maxval 255 is supported, got {maxval}")
    if w < 1 or h < 1:
        raise ValidationError(f"{path}: zero image dimension")
    return _raster(data, pos, h, w, 3)


def write_ppm(img, path) -> None:
    arr = check_image(img, channels=(3,))
    h, w, _ = arr.shape
    Path(path).write_bytes(b"P6\n%d %d\n255\n" % (w, h) + arr.tobytes())


def write_pam(img, path) -> None:
    arr = check_image(img, channels=(3, 4))
    h, w, c = arr.shape
    tupltype = b"RGB_ALPHA" if c == 4 else b"RGB"
    header = b"P7\nWIDTH %d\nHEIGHT %d\nDEPTH %d\nMAXVAL 255\nTUPLTYPE %s\nENDHDR\n" % (w, h, c, tupltype)
    Path(path).write_bytes(header + arr.tobytes())
