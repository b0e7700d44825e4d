"""Dataset schema: DFF1 feature blobs and the JSON-lines manifest.

These two formats are the contract between the numerical core and any
upstream feature extractor. A manifest starts with a header line
{"version", "d_text", "d_image", "split"}; every following line is one
article record pointing at blob files (paths relative to the manifest).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .entities import normalize_entity_set
from .errors import FormatError, SchemaError

BLOB_MAGIC = b"DFF1"
MANIFEST_VERSION = 1
MAX_PAIRS = 3
_MAX_RANK = 8
_MAX_ELEMS = 1 << 28


class Label(IntEnum):
    GENERATED = 0
    REAL = 1


def write_feature_blob(tensor: np.ndarray, path: str | Path) -> None:
    arr = np.asarray(tensor, dtype=np.float32)
    if arr.ndim < 1 or any(d <= 0 for d in arr.shape):
        raise FormatError(f"refusing to write blob with shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise FormatError(f"refusing to write non-finite blob to {path}")
    with open(path, "wb") as f:
        f.write(BLOB_MAGIC)
        f.write(struct.pack("<I", arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(np.ascontiguousarray(arr).tobytes())


def _read_blob_header(f, path) -> tuple[int, ...]:
    magic = f.read(4)
    if magic != BLOB_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {BLOB_MAGIC!r}")
    raw = f.read(4)
    if len(raw) != 4:
        raise FormatError(f"{path}: truncated header")
    (rank,) = struct.unpack("<I", raw)
    if not 1 <= rank <= _MAX_RANK:
        raise FormatError(f"{path}: implausible rank {rank}")
    raw = f.read(4 * rank)
    if len(raw) != 4 * rank:
        raise FormatError(f"{path}: truncated dims")
    dims = struct.unpack(f"<{rank}I", raw)
    n = 1
    for d in dims:
        if d == 0:
            raise FormatError(f"{path}: zero dimension in {dims}")
        n *= d
        if n > _MAX_ELEMS:
            raise FormatError(f"{path}: dims {dims} overflow element budget")
    return dims


def read_blob_shape(path: str | Path) -> tuple[int, ...]:
    """Parse only the header; also verifies the payload length on disk."""
    p = Path(path)
    with open(p, "rb") as f:
        dims = _read_blob_header(f, p)
        expected = 4 * int(np.prod(dims))
        f.seek(0, 2)
        body = f.tell() - (8 + 4 * len(dims))
        if body != expected:
            raise FormatError(f"{p}: payload is {body} bytes, header implies {expected}")
    return dims


def read_feature_blob(path: str | Path) -> np.ndarray:
    p = Path(path)
    with open(p, "rb") as f:
        dims = _read_blob_header(f, p)
        n = int(np.prod(dims))
        payload = f.read(4 * n + 1)
        if len(payload) != 4 * n:
            raise FormatError(
                f"{p}: payload is {min(len(payload), 4 * n + 1)} bytes, header implies {4 * n}"
            )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


@dataclass
class ImageCaptionPair:
    pair_id: str
    caption_words: np.ndarray  # [n_c, d_text]
    object_feats: np.ndarray  # [n_o, d_image]
    caption_entities: frozenset[str]


@dataclass
class ArticleRecord:
    article_id: str
    sentences: list[np.ndarray]  # each [n_words, d_text]
    body_entities: frozenset[str]
    pairs: list[ImageCaptionPair]
    label: Label


@dataclass
class RecordMeta:
    """One manifest line, before blobs are loaded."""

    article_id: str
    label: Label
    sentence_blobs: list[Path]
    body_entities: frozenset[str]
    pairs: list[dict]
    line_no: int


@dataclass
class Manifest:
    path: Path
    version: int
    d_text: int
    d_image: int
    split: str
    records: list[RecordMeta]

    def load_record(self, idx: int) -> ArticleRecord:
        meta = self.records[idx]
        sentences = []
        for blob in meta.sentence_blobs:
            arr = read_feature_blob(blob)
            self._check_dims(meta, blob, arr, self.d_text)
            sentences.append(arr)
        pairs = []
        for p in meta.pairs:
            cap = read_feature_blob(p["caption_blob"])
            self._check_dims(meta, p["caption_blob"], cap, self.d_text)
            obj = read_feature_blob(p["objects_blob"])
            self._check_dims(meta, p["objects_blob"], obj, self.d_image)
            pairs.append(
                ImageCaptionPair(
                    pair_id=p["pair_id"],
                    caption_words=cap,
                    object_feats=obj,
                    caption_entities=p["caption_entities"],
                )
            )
        return ArticleRecord(
            article_id=meta.article_id,
            sentences=sentences,
            body_entities=meta.body_entities,
            pairs=pairs,
            label=meta.label,
        )

    def load_all(self) -> list[ArticleRecord]:
        return [self.load_record(i) for i in range(len(self.records))]

    def _check_dims(self, meta, blob, arr, want):
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise SchemaError(
                f"{self.path} line {meta.line_no}: blob {blob} has shape "
                f"{arr.shape}, expected [n, {want}]"
            )
        if arr.shape[1] != want:
            raise SchemaError(
                f"{self.path} line {meta.line_no}: blob {blob} feature dim "
                f"{arr.shape[1]} != manifest-declared {want}"
            )


def _fail(path, line_no, msg):
    raise SchemaError(f"{path} line {line_no}: {msg}")


def _require(obj, key, typ, path, line_no):
    if key not in obj:
        _fail(path, line_no, f"missing key {key!r}")
    val = obj[key]
    if typ is int and isinstance(val, bool) or not isinstance(val, typ):
        _fail(path, line_no, f"key {key!r} must be {typ.__name__}, got {type(val).__name__}")
    return val


def load_manifest(path: str | Path) -> Manifest:
    """Parse and fully validate a manifest; blob payloads stay on disk."""
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"manifest not found: {p}")
    base = p.parent
    records: list[RecordMeta] = []
    header = None
    with open(p, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                _fail(p, line_no, f"invalid JSON: {e}")
            if header is None:
                version = _require(obj, "version", int, p, line_no)
                if version != MANIFEST_VERSION:
                    _fail(p, line_no, f"unsupported manifest version {version}")
                header = {
                    "version": version,
                    "d_text": _require(obj, "d_text", int, p, line_no),
                    "d_image": _require(obj, "d_image", int, p, line_no),
                    "split": _require(obj, "split", str, p, line_no),
                }
                if header["d_text"] < 1 or header["d_image"] < 1:
                    _fail(p, line_no, "feature dims must be positive")
                continue
            records.append(_parse_record(obj, base, p, line_no))
    if header is None:
        raise SchemaError(f"{p}: empty manifest (missing header line)")
    m = Manifest(path=p, records=records, **header)
    _validate_blobs(m)
    return m


def _parse_record(obj, base: Path, path, line_no) -> RecordMeta:
    article_id = _require(obj, "article_id", str, path, line_no)
    label = _require(obj, "label", int, path, line_no)
    if label not in (0, 1):
        _fail(path, line_no, f"label must be 0 or 1, got {label}")
    sentence_blobs = _require(obj, "sentences", list, path, line_no)
    if len(sentence_blobs) < 1:
        _fail(path, line_no, "article must have at least one sentence")
    if not all(isinstance(s, str) for s in sentence_blobs):
        _fail(path, line_no, "sentence blob paths must be strings")
    pairs_raw = _require(obj, "pairs", list, path, line_no)
    if not 1 <= len(pairs_raw) <= MAX_PAIRS:
        _fail(
            path,
            line_no,
            f"article has {len(pairs_raw)} image-caption pairs; allowed range is 1..{MAX_PAIRS}",
        )
    body_entities = _require(obj, "body_entities", list, path, line_no)
    pairs = []
    for k, pr in enumerate(pairs_raw):
        if not isinstance(pr, dict):
            _fail(path, line_no, f"pair {k} must be an object")
        pairs.append(
            {
                "pair_id": _require(pr, "pair_id", str, path, line_no),
                "caption_blob": base / _require(pr, "caption_blob", str, path, line_no),
                "objects_blob": base / _require(pr, "objects_blob", str, path, line_no),
                "caption_entities": normalize_entity_set(
                    _require(pr, "caption_entities", list, path, line_no)
                ),
            }
        )
    return RecordMeta(
        article_id=article_id,
        label=Label(label),
        sentence_blobs=[base / s for s in sentence_blobs],
        body_entities=normalize_entity_set(body_entities),
        pairs=pairs,
        line_no=line_no,
    )


def _validate_blobs(m: Manifest) -> None:
    for meta in m.records:
        blobs = list(meta.sentence_blobs)
        for pr in meta.pairs:
            blobs += [pr["caption_blob"], pr["objects_blob"]]
        for blob in blobs:
            if not Path(blob).exists():
                _fail(m.path, meta.line_no, f"referenced blob missing: {blob}")
            try:
                dims = read_blob_shape(blob)
            except FormatError as e:
                _fail(m.path, meta.line_no, str(e))
            want = m.d_image if any(blob == pr["objects_blob"] for pr in meta.pairs) else m.d_text
            if len(dims) != 2 or dims[1] != want or dims[0] < 1:
                _fail(
                    m.path,
                    meta.line_no,
                    f"blob {blob} has shape {dims}, expected [n>=1, {want}]",
                )


def write_manifest(
    path: str | Path,
    d_text: int,
    d_image: int,
    split: str,
    record_lines: list[dict],
) -> Path:
    """Emit a manifest from raw record dicts (paths already relative)."""
    p = Path(path)
    with open(p, "w", encoding="utf-8") as f:
        header = {
            "version": MANIFEST_VERSION,
            "d_text": d_text,
            "d_image": d_image,
            "split": split,
        }
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in record_lines:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    return p
