from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple, Union
import logging

import numpy as np
from matplotlib.colors import hsv_to_rgb

from crossview.datamodel import (BUILDING, BYTE, DEFAULT_PALETTE, MODEL_RESOLUTIONS, ROAD, SKY, VEGETATION,
                                 VOID, DatasetManifest, Image, ManifestEntry, Palette, SegMap)
from crossview.exceptions import ConfigError, InvalidSizeError
from crossview.utils import MANIFEST_NAME, PALETTE_NAME, save_manifest, save_palette, write_image, write_segmap

logger = logging.getLogger(__name__)

N_CATEGORIES = 4

# Category thresholds and the gap kept around them when sampling
TALL_THRESHOLD = 0.35
LUSH_THRESHOLD = 0.5
HEIGHT_MARGIN = 0.05
DENSITY_MARGIN = 0.15

HORIZON = 0.5
NOISE_STD = 4.0

SOIL = (150, 130, 100)
ASPHALT = (105, 105, 110)
SIDEWALK = (125, 115, 105)
GRASS = (60, 125, 50)
SKY_TINT = np.array([0.55, 0.7, 1.0])


@dataclass
class SceneParams:
    """
    Parameters of one synthetic scene, shared by its aerial and ground renderings

    Args:
        seed (int): Seed of the per-pixel texture\n
        road_offset (float): Road displacement from the centre, [-0.3, 0.3]\n
        building_height (float): [0.1, 0.6]\n
        building_hue (float): [0, 1)\n
        vegetation_density (float): Fraction of grass pixels in vegetated areas, [0, 1]\n
        sky_brightness (float): [0.4, 1]

    scene_category is derived: 2 * (building is tall) + (vegetation is lush)
    """

    seed: int
    road_offset: float = field(default=0.0)
    building_height: float = field(default=0.3)
    building_hue: float = field(default=0.0)
    vegetation_density: float = field(default=0.5)
    sky_brightness: float = field(default=0.8)
    scene_category: int = field(init=False)

    def __post_init__(self) -> None:
        bounds = {"road_offset": (-0.3, 0.3),
                  "building_height": (0.1, 0.6),
                  "vegetation_density": (0.0, 1.0),
                  "sky_brightness": (0.4, 1.0)}

        for name, (low, high) in bounds.items():
            value = getattr(self, name)
            if not low <= value <= high:
                raise ConfigError(f"{name}={value} outside [{low}, {high}]")

        if not 0.0 <= self.building_hue < 1.0:
            raise ConfigError(f"building_hue={self.building_hue} outside [0, 1)")

        tall = self.building_height >= TALL_THRESHOLD
        lush = self.vegetation_density >= LUSH_THRESHOLD
        self.scene_category = 2 * int(tall) + int(lush)

    @classmethod
    def sample(cls, rng: np.random.Generator, category: int, seed: int) -> "SceneParams":
        """
        Draws parameters that fall in the requested category, away from its thresholds
        """

        tall, lush = divmod(int(category), 2)

        if tall:
            building_height = rng.uniform(TALL_THRESHOLD + HEIGHT_MARGIN, 0.6)
        else:
            building_height = rng.uniform(0.1, TALL_THRESHOLD - HEIGHT_MARGIN)

        if lush:
            vegetation_density = rng.uniform(LUSH_THRESHOLD + DENSITY_MARGIN, 1.0)
        else:
            vegetation_density = rng.uniform(0.0, LUSH_THRESHOLD - DENSITY_MARGIN)

        return cls(seed=int(seed),
                   road_offset=float(rng.uniform(-0.3, 0.3)),
                   building_height=float(building_height),
                   building_hue=float(rng.uniform(0.0, 1.0)),
                   vegetation_density=float(vegetation_density),
                   sky_brightness=float(rng.uniform(0.4, 1.0)))


def _grid(size: int) -> Tuple[np.ndarray, np.ndarray]:
    centres = (np.arange(size) + 0.5) / size

    return np.meshgrid(centres, centres, indexing="ij")


def _finish(pixels: np.ndarray, noise: np.ndarray) -> Image:
    return Image(np.rint(np.clip(pixels + noise, 0, 255)), BYTE)


def _render_aerial(params: SceneParams, size: int) -> Tuple[Image, np.ndarray]:
    rng = np.random.default_rng([params.seed, 0])
    grass_field = rng.random((size, size))
    noise = rng.normal(0.0, NOISE_STD, (size, size, 3))

    v, u = _grid(size)
    side = 0.15 + 0.5 * params.building_height

    labels = np.full((size, size), VOID, dtype=np.int64)
    labels[grass_field < params.vegetation_density] = VEGETATION
    labels[np.abs(v - (0.5 + params.road_offset)) < 0.09] = ROAD
    labels[(u >= 0.5) & (u < 0.5 + side) & (v >= 0.06) & (v < 0.06 + side)] = BUILDING

    pixels = np.zeros((size, size, 3))
    pixels[labels == VOID] = SOIL
    pixels[labels == VEGETATION] = GRASS
    pixels[labels == ROAD] = ASPHALT
    pixels[labels == BUILDING] = hsv_to_rgb([params.building_hue, 0.45, 0.7]) * 255

    return _finish(pixels, noise), labels


def _render_ground(params: SceneParams, size: int) -> Tuple[Image, np.ndarray]:
    rng = np.random.default_rng([params.seed, 1])
    grass_field = rng.random((size, size))
    noise = rng.normal(0.0, NOISE_STD, (size, size, 3))

    v, u = _grid(size)
    below = v >= HORIZON
    depth = (v - HORIZON) / (1.0 - HORIZON)

    strip = below & (v < HORIZON + 0.12) & (grass_field < params.vegetation_density)
    road = below & (np.abs(u - (0.5 + params.road_offset * (0.3 + depth))) < 0.04 + 0.36 * depth)
    facade = (u < 0.3) & (v >= HORIZON - 0.75 * params.building_height) & (v < HORIZON + 0.08)

    labels = np.where(below, VOID, SKY).astype(np.int64)
    labels[strip] = VEGETATION
    labels[road] = ROAD
    labels[facade] = BUILDING

    pixels = np.zeros((size, size, 3))
    brightness = params.sky_brightness * (0.55 + 0.45 * np.clip(v / HORIZON, 0.0, 1.0))
    pixels[labels == SKY] = (SKY_TINT * 255 * brightness[..., None])[labels == SKY]
    pixels[labels == VOID] = SIDEWALK
    pixels[labels == VEGETATION] = GRASS
    pixels[labels == ROAD] = ASPHALT

    windows = ((u * 20) % 1 > 0.3) & ((u * 20) % 1 < 0.7) & ((v * 24) % 1 > 0.3) & ((v * 24) % 1 < 0.7)
    shade = np.where(windows, 0.6, 1.0)[..., None]
    facade_color = hsv_to_rgb([params.building_hue, 0.55, 0.8]) * 255
    pixels[labels == BUILDING] = (facade_color * shade)[labels == BUILDING]

    return _finish(pixels, noise), labels


def render_scene(params: SceneParams, view: str, size: int,
                 palette: Palette = DEFAULT_PALETTE) -> Tuple[Image, SegMap]:
    """
    Renders one view of a synthetic scene

    The aerial view is a top-down layout (horizontal road band, building roof, grass
    speckle); the ground view is a horizon composition (sky gradient, road trapezoid,
    building facade, grass strip). Sky never appears from above.

    Args:
        params (SceneParams): Scene description\n
        view (str): "aerial" or "ground"\n
        size (int): 64 or 256\n
        palette (Palette): Palette of the seg map

    Raises:
        InvalidSizeError: size is not a model resolution

    Returns:
        Tuple[Image, SegMap]: Byte image and its segmentation map
    """

    if size not in MODEL_RESOLUTIONS:
        raise InvalidSizeError(f"size {size} is not one of {MODEL_RESOLUTIONS}")

    if view == "aerial":
        image, labels = _render_aerial(params, size)
    elif view == "ground":
        image, labels = _render_ground(params, size)
    else:
        raise ConfigError(f"unknown view {view!r}")

    return image, SegMap(labels, palette)


def make_synthetic_dataset(n: int, seed: int, size: int, out_dir: Union[str, Path],
                           split: str = "train", palette: Palette = DEFAULT_PALETTE) -> DatasetManifest:
    """
    Writes n synthetic pairs (4 PNG files each), palette.json and manifest.jsonl

    Categories are dealt evenly (i mod N_CATEGORIES) and shuffled, so the
    histogram is flat.

    Args:
        n (int): Number of pairs (>= 1)\n
        seed (int): Dataset seed\n
        size (int): 64 or 256\n
        out_dir (Union[str, Path]): Destination directory\n
        split (str): Split tag stored in the manifest. Defaults to "train".

    Returns:
        DatasetManifest: The written manifest
    """

    if n < 1:
        raise ConfigError(f"n must be at least 1, got {n}")
    if size not in MODEL_RESOLUTIONS:
        raise InvalidSizeError(f"size {size} is not one of {MODEL_RESOLUTIONS}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    categories = rng.permutation(np.arange(n) % N_CATEGORIES)

    entries = []
    for i, category in enumerate(categories):
        params = SceneParams.sample(rng, int(category), seed=int(rng.integers(0, 2**31 - 1)))
        sample_id = f"{split}_{i:05d}"
        names = {name: f"{sample_id}_{name}.png" for name in ("aerial", "ground", "aerial_seg", "ground_seg")}

        for view in ("aerial", "ground"):
            image, seg = render_scene(params, view, size, palette)
            write_image(image, out_dir / names[view])
            write_segmap(seg, out_dir / names[f"{view}_seg"])

        entries.append(ManifestEntry(id=sample_id, scene_category=params.scene_category, **names))

    manifest = DatasetManifest(entries=entries, split_tag=split, resolution=size, root=str(out_dir))
    save_palette(palette, out_dir / PALETTE_NAME)
    save_manifest(manifest, out_dir / MANIFEST_NAME)

    logger.info("wrote %d %s pairs at %d×%d to %s", n, split, size, size, out_dir)

    return manifest
