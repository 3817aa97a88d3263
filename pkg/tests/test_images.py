import numpy as np
import pytest

from core.tools.images import (ImageFileName, LoadImage, LoadSidecar, LoadTrackImages, SaveImage, SaveSidecar,
                               SaveTrackImages)
from core.worker.exceptions import DataError
from core.worker.geo import ImageSpec


def test_image_file_names():
    assert ImageFileName(0) == "00000.pgm"
    assert ImageFileName(123) == "00123.pgm"


def test_images_are_stored_as_8bit_graymaps(tmp_path):
    image = np.random.default_rng(0).uniform(size=(16, 16))
    path = str(tmp_path / ImageFileName(0))
    SaveImage(path, image)
    with open(path, "rb") as file:
        assert file.read(2) == b"P5"
    loaded = LoadImage(path)
    assert loaded.shape == (16, 16)
    np.testing.assert_allclose(loaded, image, atol=0.5 / 255 + 1e-12)


def test_saved_images_are_clipped(tmp_path):
    path = str(tmp_path / "x.pgm")
    SaveImage(path, np.array([[-0.5, 1.5], [0.0, 1.0]]))
    np.testing.assert_array_equal(LoadImage(path), [[0.0, 1.0], [0.0, 1.0]])


def test_save_image_rejects_non_square(tmp_path):
    with pytest.raises(DataError):
        SaveImage(str(tmp_path / "x.pgm"), np.zeros((4, 5)))


def test_load_image_errors(tmp_path):
    with pytest.raises(DataError, match="not found"):
        LoadImage(str(tmp_path / "missing.pgm"))


def test_sidecar_round_trip(tmp_path):
    spec = ImageSpec(56, 28, 20.0)
    SaveSidecar(str(tmp_path), spec)
    assert LoadSidecar(str(tmp_path), 14) == ImageSpec(56, 14, 20.0)
    with pytest.raises(DataError, match="not found"):
        LoadSidecar(str(tmp_path / "elsewhere"), 14)
    (tmp_path / "image.json").write_text("{}", encoding="utf-8")
    with pytest.raises(DataError, match="malformed"):
        LoadSidecar(str(tmp_path), 14)


def test_track_images_round_trip(tmp_path):
    images = np.random.default_rng(1).uniform(size=(3, 8, 8))
    folder = str(tmp_path / "SYN00000000")
    SaveTrackImages(folder, images)
    loaded = LoadTrackImages(folder, 3, ImageSpec(8, 4))
    assert loaded.shape == (3, 8, 8)
    np.testing.assert_allclose(loaded, images, atol=0.5 / 255 + 1e-12)
    with pytest.raises(DataError, match="side_px"):
        LoadTrackImages(folder, 3, ImageSpec(16, 4))
    with pytest.raises(DataError):
        LoadTrackImages(folder, 4, ImageSpec(8, 4))
