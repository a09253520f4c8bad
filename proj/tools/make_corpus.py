#!/usr/bin/env python3
"""Regenerate the bundled PGM corpora from scikit-image sample images."""
import pathlib

import numpy as np
import skimage.color
import skimage.data

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"


def write_pgm(path, img):
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(img.tobytes())


def gray(name):
    img = getattr(skimage.data, name)()
    if img.ndim == 3:
        img = (skimage.color.rgb2gray(img) * 255.0).round().astype(np.uint8)
    return img


# (image, top, left) for 64x64 evaluation crops
DESK = [
    ("camera", 96, 208),
    ("astronaut", 64, 192),
    ("coins", 112, 96),
    ("brick", 200, 200),
]

# (image, top, left) for 128x128 training images
TRAIN = [
    ("camera", 300, 40),
    ("astronaut", 300, 300),
    ("grass", 100, 100),
    ("gravel", 250, 250),
]


def main():
    for sub, spec, size in (("desk", DESK, 64), ("train", TRAIN, 128)):
        out = ROOT / sub
        out.mkdir(parents=True, exist_ok=True)
        for name, top, left in spec:
            crop = gray(name)[top:top + size, left:left + size]
            write_pgm(out / f"{name}.pgm", crop)


if __name__ == "__main__":
    main()
