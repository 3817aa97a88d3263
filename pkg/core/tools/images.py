"""
Satellite-like image files: 8-bit portable graymaps plus one sidecar JSON
{side_px, km_per_px} per image folder.
"""
import json
import os
from typing import Sequence

import numpy as np
from PIL import Image

from ..worker.exceptions import DataError
from ..worker.geo import ImageSpec
from ..worker.variables import IMAGE_FILE_FORMAT, IMAGE_SIDECAR_FILE

__all__ = ["ImageFileName", "SaveImage", "LoadImage", "SaveSidecar", "LoadSidecar", "SaveTrackImages",
           "LoadTrackImages"]


def ImageFileName(index: int) -> str:
    return f"{index:05d}.{IMAGE_FILE_FORMAT}"


def SaveImage(path: str, image: np.ndarray):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise DataError(f"expected a square grayscale image, got shape {image.shape}")
    pixels = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(pixels).save(path, format="PPM")


def LoadImage(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise DataError(f"image not found: {path}")
    with Image.open(path) as image:
        if image.mode != "L":
            raise DataError(f"{path}: expected an 8-bit graymap, got mode {image.mode}")
        return np.asarray(image, dtype=np.float64) / 255.0


def SaveSidecar(folder: str, spec: ImageSpec):
    with open(os.path.join(folder, IMAGE_SIDECAR_FILE), "w", encoding="utf-8", newline="\n") as file:
        json.dump({"side_px": spec.image_px, "km_per_px": spec.km_per_px}, file, indent=4)


def LoadSidecar(folder: str, patch_px: int) -> ImageSpec:
    path = os.path.join(folder, IMAGE_SIDECAR_FILE)
    if not os.path.exists(path):
        raise DataError(f"image sidecar not found: {path}")
    with open(path, "r", encoding="utf-8") as file:
        try:
            data = json.load(file)
            return ImageSpec(int(data["side_px"]), patch_px, float(data["km_per_px"]))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise DataError(f"{path}: malformed sidecar ({e})")


def SaveTrackImages(folder: str, images: Sequence[np.ndarray]):
    os.makedirs(folder, exist_ok=True)
    for index, image in enumerate(images):
        SaveImage(os.path.join(folder, ImageFileName(index)), image)


def LoadTrackImages(folder: str, count: int, spec: ImageSpec) -> np.ndarray:
    images = [LoadImage(os.path.join(folder, ImageFileName(index))) for index in range(count)]
    for index, image in enumerate(images):
        if image.shape != (spec.image_px, spec.image_px):
            raise DataError(f"{folder}/{ImageFileName(index)}: shape {image.shape} does not match "
                            f"the sidecar side_px {spec.image_px}")
    return np.stack(images) if images else np.zeros((0, spec.image_px, spec.image_px))
