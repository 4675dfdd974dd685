"""Readers and writers for the toolkit's file formats.

* label maps: ``ILM v1`` text, or Cityscapes ``*_instanceIds.png`` (needs Pillow)
* vector fields: ``DCMEVF1`` little-endian binary
* class grids: ``CG v1`` text
* detections: ``DETS v1`` text with run-length encoded masks
* reports: fixed-width text tables
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .codec import CenterOfMass, Detection
from .core import (BACKGROUND, CLASS_IDS, ClassGrid, GridSpec,
                   InstanceLabelMap, ValidationError, VectorField, class_name)
from .evaluation import (AccuracyReport, ClassAccuracy, ClassScore,
                         EvalReport)

VF_MAGIC = b"DCMEVF1\0"

# Cityscapes label ids of the eight instance classes
CITYSCAPES_LABEL_TO_CLASS = {24: 1, 25: 2, 26: 3, 27: 4, 28: 5, 31: 6, 32: 7, 33: 8}


class FormatError(ValidationError):
    def __init__(self, msg: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + msg)
        self.path = path
        self.line = line


def _write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _lines(path) -> list[str]:
    with open(path, encoding="utf-8", newline="") as f:
        text = f.read()
    if "\r" in text:
        raise FormatError("CR line endings are not allowed", path)
    return text.split("\n")


def _ints(fields: Sequence[str], path, line: int) -> list[int]:
    try:
        return [int(f) for f in fields]
    except ValueError:
        raise FormatError(f"expected integers, got {' '.join(fields)!r}", path, line) from None


def _header(lines: list[str], tag: Sequence[str], n_ints: int, path) -> list[int]:
    if not lines or not lines[0].strip():
        raise FormatError("empty file", path, 1)
    parts = lines[0].split()
    if parts[:len(tag)] != list(tag) or len(parts) != len(tag) + n_ints:
        raise FormatError(f"bad header {lines[0]!r}, expected '{' '.join(tag)}' and {n_ints} integers", path, 1)
    return _ints(parts[len(tag):], path, 1)


def _int_rows(lines: list[str], start: int, rows: int, cols: int, path) -> np.ndarray:
    if len(lines) < start + rows:
        raise FormatError(f"expected {rows} data rows, file ends early", path, len(lines))
    out = np.empty((rows, cols), dtype=np.int64)
    for r in range(rows):
        lineno = start + r + 1
        vals = _ints(lines[start + r].split(), path, lineno)
        if len(vals) != cols:
            raise FormatError(f"expected {cols} values, got {len(vals)}", path, lineno)
        out[r] = vals
    rest = [l for l in lines[start + rows:] if l.strip()]
    if rest:
        raise FormatError("trailing content after data rows", path, start + rows + 1)
    return out


def _format_rows(a: np.ndarray) -> str:
    return "".join(" ".join(map(str, row)) + "\n" for row in a.tolist())


# -- instance label maps ---------------------------------------------------

def format_label_map(ilm: InstanceLabelMap) -> str:
    rows, cols = ilm.dims
    head = f"ILM v1 {rows} {cols} {len(ilm.classes)}\n"
    inst = "".join(f"inst {i} class {c}\n" for i, c in ilm.classes.items())
    return head + inst + _format_rows(ilm.labels)


def write_label_map(path, ilm: InstanceLabelMap):
    _write_text(path, format_label_map(ilm))


def read_label_map(path) -> InstanceLabelMap:
    if str(path).lower().endswith(".png"):
        return read_cityscapes_png(path)
    lines = _lines(path)
    rows, cols, k = _header(lines, ("ILM", "v1"), 3, path)
    if rows < 1 or cols < 1 or k < 0:
        raise FormatError(f"invalid dims {rows}x{cols} or instance count {k}", path, 1)
    classes = {}
    for n in range(1, k + 1):
        parts = lines[n].split() if n < len(lines) else []
        if len(parts) != 4 or parts[0] != "inst" or parts[2] != "class":
            raise FormatError(f"expected 'inst <id> class <cid>', got {' '.join(parts)!r}", path, n + 1)
        i, c = _ints([parts[1], parts[3]], path, n + 1)
        if i in classes:
            raise FormatError(f"duplicate instance {i}", path, n + 1)
        classes[i] = c
    labels = _int_rows(lines, k + 1, rows, cols, path)
    try:
        return InstanceLabelMap(labels, classes)
    except ValidationError as e:
        raise FormatError(str(e), path) from None


def cityscapes_to_label_map(raw: np.ndarray) -> InstanceLabelMap:
    """Convert a Cityscapes instance-id image (``label*1000 + index``).

    Values below 1000 are stuff or group regions and become background, as
    do instances of classes outside the eight instance classes. Instance ids
    are renumbered from 1 in increasing raw value.
    """
    raw = np.asarray(raw, dtype=np.int64)
    labels = np.zeros(raw.shape, dtype=np.int64)
    classes = {}
    next_id = 1
    for v in np.unique(raw):
        if v < 1000:
            continue
        cls = CITYSCAPES_LABEL_TO_CLASS.get(int(v) // 1000)
        if cls is None:
            continue
        labels[raw == v] = next_id
        classes[next_id] = cls
        next_id += 1
    return InstanceLabelMap(labels, classes)


def read_cityscapes_png(path) -> InstanceLabelMap:
    try:
        from PIL import Image
    except ImportError as e:  # pragma: no cover - depends on install
        raise FormatError("reading PNG label maps needs Pillow (pip install dcmeseg[png])", path) from e
    with Image.open(path) as im:
        raw = np.array(im)
    if raw.ndim != 2:
        raise FormatError(f"expected a single-channel image, got shape {raw.shape}", path)
    return cityscapes_to_label_map(raw)


# -- vector fields -----------------------------------------------------------

def vector_field_bytes(vf: VectorField) -> bytes:
    rows, cols = vf.dims
    return (VF_MAGIC + struct.pack("<II", rows, cols)
            + vf.dx.astype("<f4").tobytes() + vf.dy.astype("<f4").tobytes())


def vector_field_from_bytes(data: bytes, path=None) -> VectorField:
    if data[:8] != VF_MAGIC:
        raise FormatError("missing DCMEVF1 magic", path)
    if len(data) < 16:
        raise FormatError("truncated header", path)
    rows, cols = struct.unpack("<II", data[8:16])
    n = rows * cols
    if len(data) != 16 + 8 * n:
        raise FormatError(f"expected {16 + 8 * n} bytes for {rows}x{cols}, got {len(data)}", path)
    body = np.frombuffer(data, dtype="<f4", offset=16)
    try:
        return VectorField(body[:n].reshape(rows, cols), body[n:].reshape(rows, cols))
    except ValidationError as e:
        raise FormatError(str(e), path) from None


def write_vector_field(path, vf: VectorField):
    with open(path, "wb") as f:
        f.write(vector_field_bytes(vf))


def read_vector_field(path) -> VectorField:
    with open(path, "rb") as f:
        return vector_field_from_bytes(f.read(), path)


# -- class grids -------------------------------------------------------------

def format_class_grid(grid: ClassGrid) -> str:
    brows, bcols = grid.block_dims
    return f"CG v1 {brows} {bcols} {grid.grid.grid_size}\n" + _format_rows(grid.labels)


def write_class_grid(path, grid: ClassGrid):
    _write_text(path, format_class_grid(grid))


def read_class_grid(path) -> ClassGrid:
    lines = _lines(path)
    brows, bcols, gs = _header(lines, ("CG", "v1"), 3, path)
    if brows < 1 or bcols < 1:
        raise FormatError(f"invalid block dims {brows}x{bcols}", path, 1)
    try:
        spec = GridSpec.from_grid_size(gs)
    except ValidationError as e:
        raise FormatError(str(e), path, 1) from None
    labels = _int_rows(lines, 1, brows, bcols, path)
    try:
        return ClassGrid(labels, spec)
    except ValidationError as e:
        raise FormatError(str(e), path) from None


def read_priority(path) -> tuple[int, ...]:
    """Class ids, highest priority first, separated by commas or whitespace.

    Class names (``person``, ``car``, ...) are accepted as well.
    """
    with open(path, encoding="utf-8") as f:
        tokens = f.read().replace(",", " ").split()
    out = []
    for t in tokens:
        if t in CLASS_IDS:
            out.append(CLASS_IDS[t])
        else:
            try:
                out.append(int(t))
            except ValueError:
                raise FormatError(f"unknown class {t!r}", path) from None
    return tuple(out)


# -- detections --------------------------------------------------------------

def rle_encode(mask: np.ndarray) -> list[tuple[int, int]]:
    """``(start, length)`` runs of a mask in row-major order."""
    flat = np.concatenate([[False], np.asarray(mask, dtype=bool).ravel(), [False]])
    edges = np.flatnonzero(flat[1:] != flat[:-1])
    starts, ends = edges[::2], edges[1::2]
    return list(zip(starts.tolist(), (ends - starts).tolist()))


def rle_decode(runs: Sequence[tuple[int, int]], rows: int, cols: int) -> np.ndarray:
    flat = np.zeros(rows * cols, dtype=bool)
    for s, n in runs:
        if s < 0 or n < 1 or s + n > flat.size:
            raise ValidationError(f"run {s}:{n} outside a {rows}x{cols} mask")
        flat[s:s + n] = True
    return flat.reshape(rows, cols)


def format_detections(dets: Sequence[Detection], rows: int, cols: int) -> str:
    out = [f"DETS v1 {rows} {cols} {len(dets)}\n"]
    for d in dets:
        if d.mask.shape != (rows, cols):
            raise ValidationError(f"detection mask shape {d.mask.shape} differs from {(rows, cols)}")
        runs = " ".join(f"{s}:{n}" for s, n in rle_encode(d.mask))
        out.append(f"det {d.class_id} {d.score:.6f} {d.center.x!r} {d.center.y!r} {runs}\n")
    return "".join(out)


def write_detections(path, dets: Sequence[Detection], rows: int, cols: int):
    _write_text(path, format_detections(dets, rows, cols))


def read_detections(path) -> tuple[list[Detection], tuple[int, int]]:
    lines = _lines(path)
    rows, cols, n = _header(lines, ("DETS", "v1"), 3, path)
    dets = []
    for k in range(1, n + 1):
        parts = lines[k].split() if k < len(lines) else []
        if len(parts) < 6 or parts[0] != "det":
            raise FormatError("expected 'det <class> <score> <cm_x> <cm_y> <runs...>'", path, k + 1)
        try:
            cid = int(parts[1])
            score = float(parts[2])
            cx, cy = float(parts[3]), float(parts[4])
            runs = []
            for r in parts[5:]:
                s, ln = r.split(":")
                runs.append((int(s), int(ln)))
            dets.append(Detection(rle_decode(runs, rows, cols), CenterOfMass(cx, cy), score, cid))
        except (ValueError, ValidationError) as e:
            raise FormatError(str(e), path, k + 1) from None
    if any(l.strip() for l in lines[n + 1:]):
        raise FormatError("trailing content after detections", path, n + 2)
    return dets, (rows, cols)


# -- reports -------------------------------------------------------------------

def _class_token(name: str) -> int:
    if name in CLASS_IDS:
        return CLASS_IDS[name]
    if name.startswith("class") and name[5:].isdigit():
        return int(name[5:])
    raise ValidationError(f"unknown class name {name!r}")


def format_report(report: EvalReport) -> str:
    rule = "-" * 26 + "\n"
    out = [f"{'Class':<12}{'AP':>6}{'AP50%':>8}\n", rule]
    for c, s in report.per_class.items():
        if report.counts and report.counts.get(c, 0) == 0:
            continue
        out.append(f"{class_name(c):<12}{s.ap:>6.1f}{s.ap50:>8.1f}\n")
    out.append(rule)
    out.append(f"{'mean':<12}{report.mean_ap:>6.1f}{report.mean_ap50:>8.1f}\n")
    return "".join(out)


def parse_report(text: str, path=None) -> EvalReport:
    per_class = {}
    mean = None
    for n, line in enumerate(text.split("\n"), start=1):
        parts = line.split()
        if not parts or parts[0] == "Class" or set(line.strip()) == {"-"}:
            continue
        if len(parts) != 3:
            raise FormatError(f"expected 'name AP AP50', got {line!r}", path, n)
        try:
            ap, ap50 = float(parts[1]), float(parts[2])
            if parts[0] == "mean":
                mean = (ap, ap50)
            else:
                per_class[_class_token(parts[0])] = ClassScore(ap, ap50)
        except ValueError as e:
            raise FormatError(str(e), path, n) from None
    if mean is None:
        raise FormatError("report has no mean row", path)
    return EvalReport(per_class, mean[0], mean[1], {})


def write_report(path, report: EvalReport):
    _write_text(path, format_report(report))


def read_report(path) -> EvalReport:
    with open(path, encoding="utf-8") as f:
        return parse_report(f.read(), path)


def format_accuracy(report: AccuracyReport) -> str:
    rule = "-" * 40 + "\n"
    out = [f"{'Class':<12}{'Instances':>10}{'Correct':>9}{'Acc.%':>9}\n", rule]
    for c, a in report.per_class.items():
        out.append(f"{class_name(c):<12}{a.instances:>10d}{a.correct:>9d}{a.accuracy:>9.2f}\n")
    out.append(rule)
    out.append(f"{'total':<12}{report.total_instances:>10d}{report.total_correct:>9d}"
               f"{report.total_accuracy:>9.2f}\n")
    return "".join(out)


def parse_accuracy(text: str, path=None) -> AccuracyReport:
    per_class = {}
    total = None
    for n, line in enumerate(text.split("\n"), start=1):
        parts = line.split()
        if not parts or parts[0] == "Class" or set(line.strip()) == {"-"}:
            continue
        if len(parts) != 4:
            raise FormatError(f"expected 'name instances correct acc', got {line!r}", path, n)
        try:
            inst, ok, acc = int(parts[1]), int(parts[2]), float(parts[3])
            if parts[0] == "total":
                total = (inst, ok, acc)
            else:
                per_class[_class_token(parts[0])] = ClassAccuracy(inst, ok, acc)
        except ValueError as e:
            raise FormatError(str(e), path, n) from None
    if total is None:
        raise FormatError("accuracy table has no total row", path)
    return AccuracyReport(per_class, *total)


def format_detection_accuracy(rows: Sequence[tuple[int, int, int, float]]) -> str:
    """Rows of ``(iou_percent, detected, total, accuracy_percent)``."""
    out = [f"{'IoU%':<8}{'Detected':>10}{'Total':>8}{'Acc.%':>9}\n", "-" * 35 + "\n"]
    for t, det, total, acc in rows:
        out.append(f"{t:<8d}{det:>10d}{total:>8d}{acc:>9.2f}\n")
    return "".join(out)


def parse_detection_accuracy(text: str, path=None) -> list[tuple[int, int, int, float]]:
    out = []
    for n, line in enumerate(text.split("\n"), start=1):
        parts = line.split()
        if not parts or parts[0] == "IoU%" or set(line.strip()) == {"-"}:
            continue
        try:
            out.append((int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])))
        except (ValueError, IndexError):
            raise FormatError(f"bad detection accuracy row {line!r}", path, n) from None
    return out


def iter_files(paths: Sequence[os.PathLike | str], suffixes: Sequence[str]) -> Iterator[Path]:
    """Expand directories into their files with matching suffixes, sorted by name."""
    for p in map(Path, paths):
        if p.is_dir():
            yield from sorted(f for f in p.iterdir() if f.suffix.lower() in suffixes)
        else:
            yield p
