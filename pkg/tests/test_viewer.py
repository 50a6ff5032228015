import numpy as np
import pytest

from crossview.datamodel import BYTE, Image
from crossview.exceptions import EmptySetError
from crossview.viewer import HEADER_HEIGHT, Viewer, montage


def step_records(n: int = 6):
    return [{"event": "step", "epoch": 1 + i // 3, "step": i + 1, "d_loss": 1.4 - 0.1 * i, "g_gan": 0.7,
             "g_l1_image": 0.3, "g_l1_seg": 0.0, "total_g": 30.7} for i in range(n)]


def test_montage_size(random_image):
    rows = [[random_image(64, 64) for _ in range(4)] for _ in range(4)]

    sheet = montage(rows, ["input", "truth", "baseline", "fork"])

    assert sheet.shape == (HEADER_HEIGHT + 4 * 64, 4 * 64, 3)
    assert np.array_equal(sheet.pixels[HEADER_HEIGHT:HEADER_HEIGHT + 64, 64:128], rows[0][1].pixels)


def test_montage_pads_short_rows(random_image):
    sheet = montage([[random_image(8, 8), random_image(8, 8)], [random_image(8, 8)]])

    assert sheet.shape == (16, 16, 3)
    assert np.all(sheet.pixels[8:, 8:] == 255)


def test_montage_needs_images():
    with pytest.raises(EmptySetError):
        montage([])


def test_montage_resizes_to_tile():
    sheet = montage([[Image(np.zeros((16, 16, 3)), BYTE)]], tile=8)

    assert sheet.shape == (8, 8, 3)


def test_viewer_skips_zero_losses():
    viewer = Viewer(records=step_records())

    assert viewer.losses == ["d_loss", "g_gan", "g_l1_image", "total_g"]
    assert list(viewer.epoch_means().index) == [1, 2]


def test_viewer_saves_loss_plot(tmp_path):
    viewer = Viewer(records=step_records(), smoothing=2)
    viewer.server_mode()
    viewer.initialise_plotter()
    viewer.plot_losses()
    viewer.add_legend()
    viewer.save_figure(tmp_path, "losses.png")

    assert (tmp_path / "losses.png").stat().st_size > 0
    assert viewer.get_figure_data().lstrip().startswith("<?xml")
    viewer.close_graph()
