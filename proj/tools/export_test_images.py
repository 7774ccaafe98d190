#!/usr/bin/env python3
"""Writes the standard test images bundled with scikit-image as netpbm files.

Grayscale images become binary PGM (P5), color images binary PPM (P6). The
training tools convert color input to luma on load.
"""
import argparse
import pathlib

import numpy as np
from skimage import data

IMAGES = ("camera", "astronaut", "coffee", "chelsea")


def write_netpbm(path: pathlib.Path, pixels: np.ndarray) -> None:
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    magic = b"P5" if pixels.ndim == 2 else b"P6"
    height, width = pixels.shape[:2]
    with path.open("wb") as out:
        out.write(magic + b"\n%d %d\n255\n" % (width, height))
        out.write(pixels.tobytes())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir", type=pathlib.Path)
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name in IMAGES:
        pixels = getattr(data, name)()
        suffix = ".pgm" if pixels.ndim == 2 else ".ppm"
        write_netpbm(args.outdir / (name + suffix), pixels)
        print(name + suffix, pixels.shape)


if __name__ == "__main__":
    main()
