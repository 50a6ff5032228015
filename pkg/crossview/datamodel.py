from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
import torch
import torch.nn.functional as F

from crossview.exceptions import (ConfigError, DimensionTooSmallError, InvalidSizeError, PaletteError,
                                  RangeViolationError, ShapeMismatchError)

logger = logging.getLogger(__name__)

BYTE = "byte"
NORMALIZED = "normalized"
RANGE_BOUNDS: Dict[str, Tuple[float, float]] = {BYTE: (0.0, 255.0), NORMALIZED: (-1.0, 1.0)}

MODEL_RESOLUTIONS = (64, 256)
PREPROCESS_MODES = ("resize", "center_crop_resize", "quarter_crop_resize")
VIEWS = ("aerial", "ground")
DIRECTIONS = ("a2g", "g2a")

DEFAULT_JITTER = 30
DEFAULT_CROP = 224
MAX_CLASSES = 20


@dataclass
class Image:
    """
    An H×W×3 grid of real pixel values

    Args:
        pixels (np.ndarray): H×W×3 array (stored as float64)\n
        range_tag (str): "byte" for [0, 255] or "normalized" for [-1, 1]
    """

    pixels: np.ndarray
    range_tag: str = field(default=BYTE)

    def __post_init__(self) -> None:
        if self.range_tag not in RANGE_BOUNDS:
            raise RangeViolationError(f"unknown range tag {self.range_tag!r}")

        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ShapeMismatchError(f"expected an H×W×3 grid, got shape {self.pixels.shape}")

        low, high = RANGE_BOUNDS[self.range_tag]
        if self.pixels.size and (self.pixels.min() < low or self.pixels.max() > high):
            raise RangeViolationError(
                f"{self.range_tag} image has values in [{self.pixels.min()}, {self.pixels.max()}], "
                f"outside [{low}, {high}]")

    def __str__(self) -> str:
        return f"Image({self.height}×{self.width}, {self.range_tag})"

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.pixels.shape

    def to_uint8(self) -> np.ndarray:
        """
        Rounded 8-bit copy of a byte image, ready to be written to disk
        """

        if self.range_tag != BYTE:
            raise RangeViolationError("only byte images can be quantised to 8 bits")

        return np.clip(np.rint(self.pixels), 0, 255).astype(np.uint8)


@dataclass(eq=False)
class Palette:
    """
    Class → RGB table. Colours must be unique so colour-coded maps decode exactly

    Args:
        names (Sequence[str]): Class names, index = label\n
        colors (np.ndarray): n×3 RGB table
    """

    names: Sequence[str]
    colors: np.ndarray

    _keys: np.ndarray = field(init=False, repr=False)
    _order: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.names = tuple(self.names)
        self.colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)

        if len(self.names) != len(self.colors):
            raise PaletteError(f"{len(self.names)} names for {len(self.colors)} colours")
        if not 1 <= len(self.names) <= MAX_CLASSES:
            raise PaletteError(f"palette must have between 1 and {MAX_CLASSES} classes")

        keys = _color_keys(self.colors)
        if len(np.unique(keys)) != len(keys):
            raise PaletteError("palette colours are not unique")

        self._order = np.argsort(keys)
        self._keys = keys[self._order]

    @property
    def n_classes(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise PaletteError(f"{name} not found in palette")

    def lookup(self, labels: np.ndarray) -> np.ndarray:
        return self.colors[labels]

    def decode(self, pixels: np.ndarray) -> np.ndarray:
        """
        Exact inverse of lookup

        Raises:
            PaletteError: A pixel does not carry a palette colour
        """

        keys = _color_keys(np.asarray(pixels))
        position = np.clip(np.searchsorted(self._keys, keys), 0, len(self._keys) - 1)
        if not np.all(self._keys[position] == keys):
            raise PaletteError("colour-coded map contains colours outside the palette")

        return self._order[position].astype(np.int64)

    def quantize(self, pixels: np.ndarray) -> np.ndarray:
        """
        Nearest palette colour (euclidean RGB) for every pixel of a generated map
        """

        pixels = np.asarray(pixels, dtype=np.float64)
        distances = ((pixels[..., None, :] - self.colors.astype(np.float64)) ** 2).sum(axis=-1)

        return np.argmin(distances, axis=-1).astype(np.int64)

    def to_dict(self) -> Dict[str, List[int]]:
        return {name: [int(c) for c in color] for name, color in zip(self.names, self.colors)}

    @classmethod
    def from_dict(cls, table: Dict[str, Sequence[int]]) -> "Palette":
        return cls(names=list(table.keys()), colors=np.array(list(table.values())))


def _color_keys(colors: np.ndarray) -> np.ndarray:
    colors = np.asarray(colors).astype(np.int64)

    return (colors[..., 0] << 16) | (colors[..., 1] << 8) | colors[..., 2]


# Cityscapes colours for the classes the synthetic scenes use
CLASS_NAMES = ("void", "sky", "road", "building", "vegetation")
DEFAULT_PALETTE = Palette(names=CLASS_NAMES,
                          colors=[[0, 0, 0],
                                  [70, 130, 180],
                                  [128, 64, 128],
                                  [70, 70, 70],
                                  [107, 142, 35]])

VOID, SKY, ROAD, BUILDING, VEGETATION = range(len(CLASS_NAMES))


@dataclass
class SegMap:
    """
    Per-pixel class labels together with their colour-coded rendering

    Args:
        labels (np.ndarray): H×W integer grid with values in [0, n_classes)\n
        palette (Palette): Class → RGB table
    """

    labels: np.ndarray
    palette: Palette = field(default=DEFAULT_PALETTE)

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64)

        if self.labels.ndim != 2:
            raise ShapeMismatchError(f"labels must be an H×W grid, got shape {self.labels.shape}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.palette.n_classes):
            raise PaletteError(f"labels outside [0, {self.palette.n_classes})")

    @property
    def n_classes(self) -> int:
        return self.palette.n_classes

    @property
    def shape(self) -> Tuple[int, int]:
        return self.labels.shape

    @property
    def colorized(self) -> Image:
        return Image(self.palette.lookup(self.labels), BYTE)

    @classmethod
    def from_colorized(cls, image: Image, palette: Palette = DEFAULT_PALETTE, quantize: bool = False) -> "SegMap":
        """
        Recover labels from a colour-coded map

        Args:
            image (Image): Colour-coded map (byte range)\n
            palette (Palette): Palette used for the coding\n
            quantize (bool): Snap every pixel to its nearest palette colour (for generated maps)
        """

        if image.range_tag != BYTE:
            image = denormalize(image)

        if quantize:
            return cls(palette.quantize(image.pixels), palette)

        return cls(palette.decode(image.to_uint8()), palette)


@dataclass
class PairedSample:
    """
    An aligned aerial / ground pair and the segmentation maps of both views
    """

    aerial: Image
    ground: Image
    aerial_seg: SegMap
    ground_seg: SegMap
    id: str = field(default="")

    def __post_init__(self) -> None:
        if self.aerial.shape != self.ground.shape:
            raise ShapeMismatchError(
                f"sample {self.id}: aerial {self.aerial.shape} and ground {self.ground.shape} differ")

        for view in VIEWS:
            image, seg = self.image(view), self.seg(view)
            if image.shape[:2] != seg.shape:
                raise ShapeMismatchError(f"sample {self.id}: {view} seg map {seg.shape} does not match image")

    def image(self, view: str) -> Image:
        return self.aerial if view == "aerial" else self.ground

    def seg(self, view: str) -> SegMap:
        return self.aerial_seg if view == "aerial" else self.ground_seg


@dataclass
class ManifestEntry:
    id: str
    aerial: str
    ground: str
    aerial_seg: str
    ground_seg: str
    scene_category: Optional[int] = field(default=None)


@dataclass
class DatasetManifest:
    """
    File-path records of a dataset split. Paths are relative to root (the manifest's directory)
    """

    entries: List[ManifestEntry]
    split_tag: str = field(default="train")
    resolution: int = field(default=64)
    root: str = field(default=".")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> List[str]:
        return [entry.id for entry in self.entries]


def source_and_target(direction: str) -> Tuple[str, str]:
    """
    (conditioning view, target view) for a synthesis direction
    """

    if direction == "a2g":
        return "aerial", "ground"
    if direction == "g2a":
        return "ground", "aerial"

    raise ConfigError(f"unknown direction {direction!r}, expected one of {DIRECTIONS}")


def _resize(pixels: np.ndarray, height: int, width: int, mode: str) -> np.ndarray:
    if pixels.shape[:2] == (height, width):
        return pixels.copy()

    tensor = torch.from_numpy(np.ascontiguousarray(pixels, dtype=np.float64)).permute(2, 0, 1)[None]
    if mode == "nearest":
        out = F.interpolate(tensor, size=(height, width), mode="nearest")
    else:
        shrinking = height < pixels.shape[0] or width < pixels.shape[1]
        out = F.interpolate(tensor, size=(height, width), mode="bilinear", align_corners=False,
                            antialias=shrinking)

    return out[0].permute(1, 2, 0).numpy()


def _crop_window(height: int, width: int, target: int, mode: str, crop: int) -> Tuple[slice, slice]:
    if mode == "resize":
        return slice(0, height), slice(0, width)

    if mode == "center_crop_resize":
        if height < crop:
            raise DimensionTooSmallError("height", height, crop)
        if width < crop:
            raise DimensionTooSmallError("width", width, crop)
        top, left = (height - crop) // 2, (width - crop) // 2
        return slice(top, top + crop), slice(left, left + crop)

    if mode == "quarter_crop_resize":
        if width < 4:
            raise DimensionTooSmallError("width", width, 4)
        return slice(0, height), slice(0, width // 4)

    raise ConfigError(f"unknown preprocess mode {mode!r}, expected one of {PREPROCESS_MODES}")


def preprocess(raw: Image, target: int, mode: str = "resize", crop: int = DEFAULT_CROP) -> Image:
    """
    Bring a raw photograph to the model's square resolution

    Args:
        raw (Image): Byte image of any size\n
        target (int): Output side length\n
        mode (str): "resize", "center_crop_resize" (central crop×crop square first) or
                    "quarter_crop_resize" (leftmost quarter of a panorama first)\n
        crop (int): Crop side for center_crop_resize. Defaults to 224.

    Raises:
        DimensionTooSmallError: The image is smaller than the crop along the named axis

    Returns:
        Image: target×target byte image
    """

    if raw.range_tag != BYTE:
        raise RangeViolationError("preprocess expects a byte image")

    rows, cols = _crop_window(raw.height, raw.width, target, mode, crop)
    pixels = _resize(raw.pixels[rows, cols], target, target, "bilinear")

    return Image(np.clip(pixels, 0, 255), BYTE)


def preprocess_segmap(raw: SegMap, target: int, mode: str = "resize", crop: int = DEFAULT_CROP) -> SegMap:
    """
    Same geometry as preprocess, nearest-neighbour so labels stay labels
    """

    height, width = raw.shape
    rows, cols = _crop_window(height, width, target, mode, crop)
    labels = _resize(raw.labels[rows, cols, None].astype(np.float64), target, target, "nearest")

    return SegMap(labels[..., 0].astype(np.int64), raw.palette)


def normalize(img: Image) -> Image:
    """
    Linear map [0, 255] → [-1, 1]
    """

    if img.range_tag != BYTE:
        raise RangeViolationError(f"normalize expects a byte image, got {img.range_tag}")

    return Image(img.pixels / 127.5 - 1.0, NORMALIZED)


def denormalize(img: Image) -> Image:
    """
    Linear map [-1, 1] → [0, 255]
    """

    if img.range_tag != NORMALIZED:
        raise RangeViolationError(f"denormalize expects a normalized image, got {img.range_tag}")

    return Image(np.clip((img.pixels + 1.0) * 127.5, 0, 255), BYTE)


def image_to_tensor(img: Image) -> torch.Tensor:
    """
    3×H×W float32 tensor in [-1, 1]
    """

    if img.range_tag == BYTE:
        img = normalize(img)

    return torch.from_numpy(np.ascontiguousarray(img.pixels.transpose(2, 0, 1))).float()


def tensor_to_image(tensor: torch.Tensor) -> Image:
    """
    Byte image from a 3×H×W tensor in [-1, 1]
    """

    pixels = tensor.detach().cpu().double().clamp(-1, 1).permute(1, 2, 0).numpy()

    return denormalize(Image(pixels, NORMALIZED))


def _jitter_view(image: Image, seg: SegMap, jitter: int, top: int, left: int) -> Tuple[Image, SegMap]:
    height, width = seg.shape
    big_pixels = _resize(image.pixels, height + jitter, width + jitter, "bilinear")
    big_labels = _resize(seg.labels[..., None].astype(np.float64), height + jitter, width + jitter, "nearest")

    pixels = np.clip(big_pixels[top:top + height, left:left + width], *RANGE_BOUNDS[image.range_tag])
    labels = big_labels[top:top + height, left:left + width, 0].astype(np.int64)

    return Image(pixels, image.range_tag), SegMap(labels, seg.palette)


def augment(sample: PairedSample, rng: np.random.Generator, jitter: int = DEFAULT_JITTER,
            flip_prob: float = 0.5) -> PairedSample:
    """
    Random jitter and horizontal flip for training pairs

    Each view is upscaled by jitter pixels and randomly cropped back, with the same
    offsets for the image and its seg map (independent offsets per view). The whole
    pair is then flipped left-right with probability flip_prob.

    Args:
        sample (PairedSample): Pair to augment\n
        rng (np.random.Generator): Draws, in order: flip, aerial offsets, ground offsets\n
        jitter (int): Upscale margin in pixels. Defaults to 30.\n
        flip_prob (float): Flip probability. Defaults to 0.5.

    Returns:
        PairedSample: Augmented pair with the original resolution
    """

    flip = rng.random() < flip_prob

    views = {}
    for view in VIEWS:
        image, seg = sample.image(view), sample.seg(view)
        if jitter > 0:
            top, left = (int(offset) for offset in rng.integers(0, jitter + 1, size=2))
            image, seg = _jitter_view(image, seg, jitter, top, left)

        if flip:
            image = Image(image.pixels[:, ::-1].copy(), image.range_tag)
            seg = SegMap(seg.labels[:, ::-1].copy(), seg.palette)

        views[view] = (image, seg)

    return PairedSample(aerial=views["aerial"][0],
                        ground=views["ground"][0],
                        aerial_seg=views["aerial"][1],
                        ground_seg=views["ground"][1],
                        id=sample.id)
