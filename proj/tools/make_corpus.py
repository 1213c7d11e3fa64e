#!/usr/bin/env python3
"""Write a small natural-scene corpus (Netpbm) from images bundled with
scikit-image and scikit-learn. Used by the acceptance suite."""
import os
import sys

import numpy as np
from PIL import Image
import skimage
import sklearn.datasets

SKIMAGE_DATA = os.path.join(os.path.dirname(skimage.__file__), "data")
GRAY = ["camera.png", "grass.png", "gravel.png", "brick.png", "moon.png",
        "motorcycle_left.png", "coffee.png", "astronaut.png"]
COLOR = ["chelsea.png", "rocket.jpg"]


def bundled(name):
    return np.asarray(Image.open(os.path.join(SKIMAGE_DATA, name)))


def write(img, path):
    Image.fromarray(img).save(path)


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for name in GRAY:
        img = bundled(name)
        if img.ndim == 3:
            rgb = img[..., :3].astype(np.float64)
            img = np.clip(np.rint(rgb @ [0.299, 0.587, 0.114]), 0, 255).astype(np.uint8)
        write(img, os.path.join(out_dir, os.path.splitext(name)[0] + ".pgm"))
    for name in COLOR:
        write(bundled(name)[..., :3], os.path.join(out_dir, os.path.splitext(name)[0] + ".ppm"))
    for img, name in zip(sklearn.datasets.load_sample_images().images, ["china", "flower"]):
        write(img, os.path.join(out_dir, f"{name}.ppm"))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/corpus")
