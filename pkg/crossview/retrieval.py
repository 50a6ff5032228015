from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union
import logging

import numpy as np

from crossview.datamodel import DatasetManifest, Image, source_and_target
from crossview.exceptions import ConfigError, EmptySetError, ShapeMismatchError
from crossview.utils import GeneratedSet, entry_path, read_image
from crossview.viewer import montage

logger = logging.getLogger(__name__)

DEFAULT_K = 3


@dataclass
class Neighbour:
    id: str
    distance: float
    rank: int


def _downsample(pixels: np.ndarray, factor: int) -> np.ndarray:
    """
    Block mean over factor×factor squares of an (..., H, W, 3) array
    """

    if factor == 1:
        return pixels

    height, width = pixels.shape[-3:-1]
    if height % factor or width % factor:
        raise ConfigError(f"downsample factor {factor} does not divide {height}×{width}")

    shape = pixels.shape[:-3] + (height // factor, factor, width // factor, factor, 3)

    return pixels.reshape(shape).mean(axis=(-4, -2))


@dataclass
class TrainingIndex:
    """
    The training images stacked once (byte space, optionally block-downsampled) for many queries

    Args:
        ids (List[str]): Sample ids, one per image\n
        pixels (np.ndarray): N×H×W×3 byte values\n
        downsample (int): Block-mean factor applied to the pixels and to every query
    """

    ids: List[str]
    pixels: np.ndarray
    downsample: int = field(default=1)

    def __post_init__(self) -> None:
        if len(self.ids) == 0:
            raise EmptySetError("training set is empty")
        if self.downsample < 1:
            raise ConfigError(f"downsample factor must be positive, got {self.downsample}")

        self.pixels = _downsample(np.asarray(self.pixels, dtype=np.float64), self.downsample)
        if self.pixels.shape[0] != len(self.ids):
            raise ShapeMismatchError(f"{len(self.ids)} ids for {self.pixels.shape[0]} images")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_images(cls, images: Dict[str, Image], downsample: int = 1) -> "TrainingIndex":
        if not images:
            raise EmptySetError("training set is empty")

        shapes = {image.shape for image in images.values()}
        if len(shapes) > 1:
            raise ShapeMismatchError(f"training images have several resolutions {sorted(shapes)}")

        return cls(ids=list(images), pixels=np.stack([image.pixels for image in images.values()]),
                   downsample=downsample)

    @classmethod
    def from_manifest(cls, manifest: DatasetManifest, view: str, downsample: int = 1) -> "TrainingIndex":
        images = {entry.id: read_image(entry_path(manifest, entry, view)) for entry in manifest.entries}

        return cls.from_images(images, downsample)

    def distances(self, query: Image) -> np.ndarray:
        pixels = _downsample(query.pixels, self.downsample)
        if pixels.shape != self.pixels.shape[1:]:
            raise ShapeMismatchError(f"query of shape {query.shape} does not match the training images")

        return np.abs(self.pixels - pixels).mean(axis=(1, 2, 3))

    def query(self, image: Image, k: int = DEFAULT_K) -> List[Neighbour]:
        """
        The k training images closest in mean absolute difference, ascending, ties by id
        """

        if not 1 <= k <= len(self):
            raise ConfigError(f"k={k} outside [1, {len(self)}]")

        distances = self.distances(image)
        order = sorted(range(len(self)), key=lambda i: (distances[i], self.ids[i]))

        return [Neighbour(id=self.ids[i], distance=float(distances[i]), rank=rank + 1)
                for rank, i in enumerate(order[:k])]


def knn_l1(query: Image, training: Union[TrainingIndex, Dict[str, Image]], k: int = DEFAULT_K,
           downsample: int = 1) -> List[Neighbour]:
    """
    Ranks the training images by mean absolute (L1) distance to the query

    Args:
        query (Image): Byte image\n
        training (Union[TrainingIndex, Dict[str, Image]]): Index, or id → byte image\n
        k (int): Neighbours to return. Defaults to 3.\n
        downsample (int): Block-mean factor when training is a dict

    Raises:
        EmptySetError: Empty training set
        ValueError: k larger than the training set
        ShapeMismatchError: Resolutions differ

    Returns:
        List[Neighbour]: k neighbours, distances non-decreasing
    """

    if not isinstance(training, TrainingIndex):
        training = TrainingIndex.from_images(training, downsample)

    return training.query(query, k)


def retrieve_generated(generated: GeneratedSet, index: TrainingIndex, k: int = DEFAULT_K) -> List[Dict[str, object]]:
    """
    One record per generated image: its id and its k nearest training images
    """

    records = []
    for item in generated.items:
        neighbours = index.query(read_image(generated.path(item)), k)
        records.append({"id": item.id,
                        "image": str(generated.path(item)),
                        "neighbours": [{"id": n.id, "distance": n.distance, "rank": n.rank} for n in neighbours]})

    logger.info("retrieved %d neighbours for %d generated images", k, len(records))

    return records


def neighbour_montage(records: Sequence[Dict[str, object]], generated: GeneratedSet, manifest: DatasetManifest,
                      train_manifest: DatasetManifest, limit: Optional[int] = None) -> Image:
    """
    Rows of input | generated | nearest training images
    """

    source_view, target_view = source_and_target(generated.direction)
    test_entries = {entry.id: entry for entry in manifest.entries}
    train_entries = {entry.id: entry for entry in train_manifest.entries}
    items = {item.id: item for item in generated.items}

    rows = []
    for record in list(records)[:limit]:
        entry = test_entries[record["id"]]
        row = [read_image(entry_path(manifest, entry, source_view)), read_image(generated.path(items[record["id"]]))]
        row += [read_image(entry_path(train_manifest, train_entries[n["id"]], target_view))
                for n in record["neighbours"]]
        rows.append(row)

    k = len(records[0]["neighbours"]) if records else 0
    header = ["input", "generated"] + [f"neighbour {rank}" for rank in range(1, k + 1)]

    return montage(rows, header)
