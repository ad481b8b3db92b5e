"""Manifest ingestion, train/validation splitting, and MOS z-score normalization.

Manifest CSV format: header ``path,mos`` or ``path,mos,split``, UTF-8, LF line
endings, plain decimal numbers.  Split labels are ``train``, ``val``, or
``unassigned`` (an absent column or empty cell means unassigned).  Relative
image paths are resolved against the manifest's directory.

Scores are normalized as z = (mos - mu) / sigma with the mean and *population*
standard deviation of the training split, and predictions are mapped back with
mos = clamp(z * sigma + mu, clip_lo, clip_hi).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (
    BadHeader,
    DegenerateScores,
    DuplicatePath,
    EmptyManifest,
    MissingFile,
    TooFewRecords,
    UnparsableMos,
    UnparsableSplit,
)
from .rng import SeededRng

TRAIN = "train"
VAL = "val"
UNASSIGNED = "unassigned"

_SPLITS = {TRAIN, VAL, UNASSIGNED}


@dataclass(frozen=True)
class MosRecord:
    image_path: str
    mos: float
    split: str = UNASSIGNED

    def __post_init__(self):
        if not self.image_path:
            raise ValueError("image_path must be non-empty")
        if not math.isfinite(self.mos):
            raise ValueError("mos must be finite")
        if self.split not in _SPLITS:
            raise ValueError(f"unknown split {self.split!r}")


@dataclass
class Manifest:
    records: list[MosRecord]
    source_tag: str = ""
    root: Path | None = None

    def __post_init__(self):
        paths = [r.image_path for r in self.records]
        if len(set(paths)) != len(paths):
            dupes = sorted({p for p in paths if paths.count(p) > 1})
            raise DuplicatePath(f"duplicate image paths: {dupes[:3]}")

    def __len__(self) -> int:
        return len(self.records)

    def resolve(self, record: MosRecord) -> Path:
        p = Path(record.image_path)
        if p.is_absolute() or self.root is None:
            return p
        return self.root / p

    def subset(self, split: str) -> list[MosRecord]:
        return [r for r in self.records if r.split == split]


def load_manifest(path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines:
        raise BadHeader("empty manifest file")
    header = lines[0].strip()
    if header == "path,mos":
        has_split = False
    elif header == "path,mos,split":
        has_split = True
    else:
        raise BadHeader(f"expected header 'path,mos[,split]', got {header!r}")
    records = []
    for row_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != (3 if has_split else 2):
            raise BadHeader(f"row {row_no}: expected {3 if has_split else 2} columns")
        try:
            mos = float(parts[1])
            if not math.isfinite(mos):
                raise ValueError
        except ValueError:
            raise UnparsableMos(row_no, parts[1]) from None
        split = UNASSIGNED
        if has_split:
            token = parts[2].strip()
            if token:
                if token not in _SPLITS:
                    raise UnparsableSplit(row_no, token)
                split = token
        records.append(MosRecord(image_path=parts[0], mos=mos, split=split))
    return Manifest(records=records, source_tag=str(path), root=path.parent)


def save_manifest(manifest: Manifest, path) -> None:
    path = Path(path)
    lines = ["path,mos,split"]
    for r in manifest.records:
        lines.append(f"{r.image_path},{r.mos!r},{r.split}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def split(manifest: Manifest, train_fraction: float, seed: int) -> Manifest:
    """Assign train/val labels: seeded shuffle, round(N*fraction) train records.

    Record order is preserved; only the labels change.  Half-way counts round
    up.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(manifest.records)
    if n == 0:
        raise EmptyManifest("cannot split an empty manifest")
    n_train = int(math.floor(n * train_fraction + 0.5))
    order = list(range(n))
    SeededRng(seed).derive("split").shuffle(order)
    train_idx = set(order[:n_train])
    records = [
        replace(r, split=TRAIN if i in train_idx else VAL)
        for i, r in enumerate(manifest.records)
    ]
    return Manifest(records=records, source_tag=manifest.source_tag, root=manifest.root)


@dataclass(frozen=True)
class ZScoreNormalizer:
    mu: float
    sigma: float
    clip_lo: float = 1.0
    clip_hi: float = 5.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if not self.clip_lo < self.clip_hi:
            raise ValueError("clip_lo must be < clip_hi")


def fit_normalizer(records: list[MosRecord], clip_lo: float = 1.0, clip_hi: float = 5.0) -> ZScoreNormalizer:
    """Mean and population standard deviation of the given (training) records."""
    if len(records) < 2:
        raise TooFewRecords(f"need >= 2 records to fit, got {len(records)}")
    scores = [r.mos for r in records]
    mu = sum(scores) / len(scores)
    var = sum((x - mu) ** 2 for x in scores) / len(scores)
    if var == 0.0:
        raise DegenerateScores("all MOS values identical")
    return ZScoreNormalizer(mu=mu, sigma=math.sqrt(var), clip_lo=clip_lo, clip_hi=clip_hi)


def normalize(n: ZScoreNormalizer, mos: float) -> float:
    return (mos - n.mu) / n.sigma


def denormalize_clip(n: ZScoreNormalizer, z: float) -> float:
    return min(n.clip_hi, max(n.clip_lo, z * n.sigma + n.mu))


def save_normalizer(n: ZScoreNormalizer, path) -> None:
    payload = {"mu": n.mu, "sigma": n.sigma, "clip_lo": n.clip_lo, "clip_hi": n.clip_hi}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_normalizer(path) -> ZScoreNormalizer:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"normalizer not found: {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    return normalizer_from_json(payload)


def normalizer_from_json(payload: dict) -> ZScoreNormalizer:
    return ZScoreNormalizer(
        mu=float(payload["mu"]),
        sigma=float(payload["sigma"]),
        clip_lo=float(payload.get("clip_lo", 1.0)),
        clip_hi=float(payload.get("clip_hi", 5.0)),
    )


def normalizer_to_json(n: ZScoreNormalizer) -> dict:
    return {"mu": n.mu, "sigma": n.sigma, "clip_lo": n.clip_lo, "clip_hi": n.clip_hi}
