from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union
import hashlib
import json
import logging
import os

import numpy as np
import pandas as pd
from PIL import Image as PILImage

from crossview.datamodel import (BYTE, DEFAULT_PALETTE, DatasetManifest, Image, ManifestEntry,
                                 PairedSample, Palette, SegMap, source_and_target)
from crossview.exceptions import ManifestError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MANIFEST_NAME = "manifest.jsonl"
PALETTE_NAME = "palette.json"
IMAGE_FIELDS = ("aerial", "ground", "aerial_seg", "ground_seg")
DETERMINISTIC_ENV = "CROSSVIEW_DETERMINISTIC"


def read_image(path: PathLike) -> Image:
    """
    Reads an 8-bit RGB file as a byte Image
    """

    with PILImage.open(path) as handle:
        return Image(np.asarray(handle.convert("RGB"), dtype=np.float64), BYTE)


def write_image(image: Image, path: PathLike) -> None:
    """
    Writes a byte Image as a lossless PNG
    """

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(image.to_uint8(), mode="RGB").save(path, format="PNG")


def read_segmap(path: PathLike, palette: Palette = DEFAULT_PALETTE) -> SegMap:
    return SegMap.from_colorized(read_image(path), palette)


def write_segmap(seg: SegMap, path: PathLike) -> None:
    write_image(seg.colorized, path)


def save_palette(palette: Palette, path: PathLike) -> None:
    Path(path).write_text(json.dumps(palette.to_dict(), indent=2))


def load_palette(path: PathLike) -> Palette:
    return Palette.from_dict(json.loads(Path(path).read_text()))


def save_manifest(manifest: DatasetManifest, path: PathLike) -> None:
    """
    Writes a manifest as JSON-lines. Paths are stored relative to the manifest's directory

    Args:
        manifest (DatasetManifest): The manifest to write\n
        path (PathLike): Target .jsonl file
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    root = Path(manifest.root)

    records = []
    for entry in manifest.entries:
        record = {"id": entry.id}
        for name in IMAGE_FIELDS:
            record[name] = Path(os.path.relpath(root / getattr(entry, name), path.parent)).as_posix()
        record["scene_category"] = entry.scene_category
        record["split"] = manifest.split_tag
        record["resolution"] = manifest.resolution
        records.append(record)

    pd.DataFrame.from_records(records).to_json(path, orient="records", lines=True)


def load_manifest(path: PathLike, split: Optional[str] = None) -> DatasetManifest:
    """
    Loads a JSON-lines manifest and checks it

    Args:
        path (PathLike): The .jsonl file (or the directory holding manifest.jsonl)\n
        split (Optional[str]): Expected split tag

    Raises:
        ManifestError: Missing file, duplicated id, mixed or unexpected split/resolution

    Returns:
        DatasetManifest: Manifest rooted at the file's directory
    """

    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise ManifestError(f"manifest {path} not found")

    records = pd.read_json(path, lines=True, dtype=False)
    if records.empty:
        raise ManifestError(f"manifest {path} is empty")

    for column in ("split", "resolution"):
        if column in records and records[column].nunique() > 1:
            raise ManifestError(f"manifest {path} mixes several values of {column}")

    split_tag = str(records["split"].iloc[0]) if "split" in records else "train"
    resolution = int(records["resolution"].iloc[0]) if "resolution" in records else 0
    if split is not None and split_tag != split:
        raise ManifestError(f"manifest {path} is a {split_tag} split, expected {split}")

    entries = []
    for _, record in records.iterrows():
        category = record.get("scene_category")
        entries.append(ManifestEntry(id=str(record["id"]),
                                     aerial=record["aerial"],
                                     ground=record["ground"],
                                     aerial_seg=record["aerial_seg"],
                                     ground_seg=record["ground_seg"],
                                     scene_category=None if category is None or pd.isna(category) else int(category)))

    manifest = DatasetManifest(entries=entries, split_tag=split_tag, resolution=resolution, root=str(path.parent))
    validate_manifest(manifest)

    return manifest


def validate_manifest(manifest: DatasetManifest) -> None:
    ids = manifest.ids
    if len(set(ids)) != len(ids):
        raise ManifestError("manifest ids are not unique")

    for entry in manifest.entries:
        for name in IMAGE_FIELDS:
            file_path = entry_path(manifest, entry, name)
            if not file_path.exists():
                raise ManifestError(f"sample {entry.id}: {name} file {file_path} does not exist")


def entry_path(manifest: DatasetManifest, entry: ManifestEntry, name: str) -> Path:
    return Path(manifest.root) / getattr(entry, name)


def load_palette_for(manifest: DatasetManifest) -> Palette:
    palette_path = Path(manifest.root) / PALETTE_NAME

    return load_palette(palette_path) if palette_path.exists() else DEFAULT_PALETTE


def load_sample(manifest: DatasetManifest, index: int, palette: Optional[Palette] = None) -> PairedSample:
    """
    Reads the four files of one manifest entry
    """

    palette = palette or load_palette_for(manifest)
    entry = manifest.entries[index]

    return PairedSample(aerial=read_image(entry_path(manifest, entry, "aerial")),
                        ground=read_image(entry_path(manifest, entry, "ground")),
                        aerial_seg=read_segmap(entry_path(manifest, entry, "aerial_seg"), palette),
                        ground_seg=read_segmap(entry_path(manifest, entry, "ground_seg"), palette),
                        id=entry.id)


def save_records(records: List[Dict], path: PathLike) -> None:
    """
    Writes a list of flat records as JSON-lines
    """

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame.from_records(records).to_json(path, orient="records", lines=True)


def load_records(path: PathLike) -> List[Dict]:
    return pd.read_json(path, lines=True, dtype=False).to_dict(orient="records")


def file_sha256(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)

    return digest.hexdigest()


def deterministic_requested() -> bool:
    return os.environ.get(DETERMINISTIC_ENV, "0") not in ("", "0", "false", "False")


def force_deterministic() -> None:
    """
    Switches torch to deterministic kernels for reproducibility runs
    """

    import torch

    os.environ.setdefault("CUBLAS_WORKSPACE_CONFIG", ":4096:8")
    torch.use_deterministic_algorithms(True)
    torch.backends.cudnn.benchmark = False
    torch.backends.cudnn.deterministic = True
    logger.debug("deterministic torch kernels enabled")


GENERATED_NAME = "generated.jsonl"


@dataclass
class GeneratedItem:
    id: str
    image: str
    seg: Optional[str] = field(default=None)


@dataclass
class GeneratedSet:
    """
    Generated (or reference) target-view images of a manifest, paths relative to root
    """

    items: List[GeneratedItem]
    direction: str
    arch: str
    root: str = field(default=".")

    def __len__(self) -> int:
        return len(self.items)

    def path(self, item: GeneratedItem, name: str = "image") -> Path:
        return Path(self.root) / getattr(item, name)

    @property
    def has_seg(self) -> bool:
        return bool(self.items) and all(item.seg is not None for item in self.items)

    def save(self, path: Optional[PathLike] = None) -> Path:
        path = Path(path or Path(self.root) / GENERATED_NAME)
        records = [{"id": item.id, "image": item.image, "seg": item.seg,
                    "direction": self.direction, "arch": self.arch} for item in self.items]
        save_records(records, path)

        return path

    @classmethod
    def load(cls, path: PathLike) -> "GeneratedSet":
        path = Path(path)
        if path.is_dir():
            path = path / GENERATED_NAME
        if not path.exists():
            raise ManifestError(f"generated set {path} not found")

        records = load_records(path)
        if not records:
            raise ManifestError(f"generated set {path} is empty")

        items = [GeneratedItem(id=str(record["id"]), image=record["image"],
                               seg=record["seg"] if isinstance(record.get("seg"), str) else None)
                 for record in records]

        return cls(items=items, direction=records[0]["direction"], arch=records[0]["arch"], root=str(path.parent))


def reference_set(manifest: DatasetManifest, direction: str) -> GeneratedSet:
    """
    The real target-view images of a manifest presented as a generated set
    """

    _, target_view = source_and_target(direction)
    items = [GeneratedItem(id=entry.id, image=getattr(entry, target_view), seg=getattr(entry, f"{target_view}_seg"))
             for entry in manifest.entries]

    return GeneratedSet(items=items, direction=direction, arch="reference", root=manifest.root)
