from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from PIL import Image as PILImage
from PIL import ImageDraw

from crossview.datamodel import BYTE, Image
from crossview.exceptions import EmptySetError

LOSS_FIELDS = ("d_loss", "g_gan", "g_l1_image", "g_l1_seg", "d2_loss", "g2_gan", "g2_l1_seg", "total_g")

HEADER_HEIGHT = 20
BACKGROUND = (255, 255, 255)
TEXT_COLOUR = (0, 0, 0)


@dataclass
class Viewer:
    """
    Plot the loss curves of a training run

    Args:
        records (List[Dict[str, float]]): Step records of a log.jsonl\n
        losses (List[str]): Loss fields to draw (leave blank for every non-zero one)\n
        title (str): Figure title\n
        smoothing (int): Moving-average window in steps
    """

    records: List[Dict[str, float]]
    losses: List[str] = field(default_factory=list)
    title: str = field(default="Training losses")
    smoothing: int = field(default=1)

    frame: pd.DataFrame = field(init=False)

    fig: plt.Figure = field(init=False)
    ax: plt.Axes = field(init=False)

    def __post_init__(self) -> None:
        if not self.records:
            raise EmptySetError("no step records to plot")

        self.frame = pd.DataFrame.from_records(self.records)
        if "step" not in self.frame:
            self.frame["step"] = np.arange(1, len(self.frame) + 1)

        if not self.losses:
            self.losses = [name for name in LOSS_FIELDS if name in self.frame and self.frame[name].abs().sum() > 0]

    def __str__(self) -> str:
        return f"Steps: {len(self.frame)}\nLosses: {', '.join(self.losses)}\nSmoothing: {self.smoothing}"

    def initialise_plotter(self, dpi: int = 100, size: float = 8) -> None:
        """
        Initialises the area where everything will be drawn on. Call every time you want to draw a new figure

        Args:
            dpi (int): Resolution (higher dpi, more resolution). Defaults to 100.
            size (float): Width in inches, the height is half of it
        """

        self.fig, self.ax = plt.subplots()
        self.fig.set_size_inches(size, size / 2)
        self.fig.set_dpi(dpi)

    def server_mode(self) -> None:
        """
        Allow matplotlib to work without a display (training servers, CI)
        """

        matplotlib.use("Agg")

    def close_graph(self) -> None:
        plt.close(self.fig)

    def add_grid(self) -> None:
        self.ax.grid()

    def add_legend(self) -> None:
        self.ax.legend()

    def label_axes(self, x_label: str = "step", y_label: str = "loss") -> None:
        self.ax.set_xlabel(x_label)
        self.ax.set_ylabel(y_label)

    def show_plot(self) -> None:
        plt.show()

    def save_figure(self, path: Union[str, Path], filename: str) -> None:
        """
        Save figure as an image

        Args:
            path (Union[str, Path]): directory where the image will be stored
            filename (str): name of image
        """

        Path(path).mkdir(parents=True, exist_ok=True)
        self.fig.savefig(Path(path) / filename, dpi=150)

    def get_figure_data(self) -> str:
        """
        Get the figure as SVG text (to embed into an html report, for example)
        """

        data = StringIO()
        self.fig.savefig(data, format="svg")
        data.seek(0)

        return data.getvalue()

    def plot_losses(self) -> None:
        """
        One curve per loss field against the step count
        """

        for name in self.losses:
            values = self.frame[name].rolling(self.smoothing, min_periods=1).mean()
            self.ax.plot(self.frame["step"], values, label=name)

        self.ax.set_title(self.title)
        self.label_axes()

    def epoch_means(self) -> pd.DataFrame:
        if "epoch" not in self.frame:
            raise KeyError("step records carry no epoch field")

        return self.frame.groupby("epoch")[self.losses].mean()


def _tile(image: Image, tile: int) -> np.ndarray:
    pixels = image.to_uint8()
    if pixels.shape[:2] != (tile, tile):
        pixels = np.asarray(PILImage.fromarray(pixels).resize((tile, tile), PILImage.BILINEAR))

    return pixels


def montage(rows: Sequence[Sequence[Image]], header: Optional[Sequence[str]] = None,
            tile: Optional[int] = None) -> Image:
    """
    Tiles images into a grid, optionally under a labelled header row

    Every image is drawn on a tile×tile square (the first image's height by
    default); short rows are padded with white tiles.

    Args:
        rows (Sequence[Sequence[Image]]): Byte images, one list per row\n
        header (Optional[Sequence[str]]): Column labels\n
        tile (Optional[int]): Tile side in pixels

    Raises:
        EmptySetError: No image given

    Returns:
        Image: (header + rows·tile) × (cols·tile) byte image
    """

    if not rows or not any(rows):
        raise EmptySetError("montage needs at least one image")

    tile = tile or next(image for row in rows for image in row).height
    cols = max(max(len(row) for row in rows), len(header or []))
    top = HEADER_HEIGHT if header else 0

    canvas = np.full((top + len(rows) * tile, cols * tile, 3), BACKGROUND, dtype=np.uint8)
    for r, row in enumerate(rows):
        for c, image in enumerate(row):
            canvas[top + r * tile:top + (r + 1) * tile, c * tile:(c + 1) * tile] = _tile(image, tile)

    if header:
        sheet = PILImage.fromarray(canvas)
        draw = ImageDraw.Draw(sheet)
        for c, label in enumerate(header):
            draw.text((c * tile + 3, 4), label, fill=TEXT_COLOUR)
        canvas = np.asarray(sheet)

    return Image(canvas.astype(np.float64), BYTE)
