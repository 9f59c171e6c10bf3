"""
Image handlers for rendered time surfaces and simulated frames.

PGM (8-bit greyscale) goes through Pillow, false-colour PNG through pypng.
"""

from pathlib import Path
from typing import BinaryIO, Union

import numpy as np
import png  # pypng
from PIL import Image

Dest = Union[str, Path, BinaryIO]


class PGMHandler:
    """Handler for 8-bit greyscale PGM images using Pillow."""

    @staticmethod
    def read(source: Dest) -> np.ndarray:
        """
        Read a PGM file.

        Returns:
            uint8 array of shape (height, width)
        """
        with Image.open(source) as img:
            return np.array(img.convert('L'), dtype=np.uint8)

    @staticmethod
    def write(dest: Dest, pixels: np.ndarray) -> None:
        """
        Write a greyscale image as binary PGM (P5).

        Args:
            dest: File path or file-like object
            pixels: uint8 array of shape (height, width)
        """
        if pixels.ndim != 2 or pixels.dtype != np.uint8:
            raise ValueError(f"PGM needs a 2-D uint8 array, got {pixels.dtype} {pixels.shape}")
        Image.fromarray(pixels).save(dest, format='PPM')


class PNGHandler:
    """Handler for 8-bit RGB PNG images using pypng."""

    @staticmethod
    def read(source: Dest) -> np.ndarray:
        """
        Read a PNG file.

        Returns:
            uint8 array of shape (height, width, 3)
        """
        if isinstance(source, (str, Path)):
            reader = png.Reader(filename=str(source))
        else:
            reader = png.Reader(file=source)
        # asRGB8 normalizes greyscale/palette input; alpha is not expected here
        width, height, rows, _ = reader.asRGB8()
        return np.vstack([np.frombuffer(bytes(row), dtype=np.uint8) for row in rows]
                         ).reshape(height, width, 3)

    @staticmethod
    def write(dest: Dest, rgb: np.ndarray, compression: int = 9) -> None:
        """
        Write an RGB image.

        Args:
            dest: File path or file-like object
            rgb: uint8 array of shape (height, width, 3)
            compression: zlib level 0-9
        """
        if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
            raise ValueError(f"PNG needs a (H, W, 3) uint8 array, got {rgb.dtype} {rgb.shape}")
        height, width, _ = rgb.shape
        writer = png.Writer(
            width=width,
            height=height,
            greyscale=False,
            alpha=False,
            bitdepth=8,
            compression=compression,
        )
        flat_rows = rgb.reshape(height, width * 3).tolist()
        if isinstance(dest, (str, Path)):
            with open(dest, 'wb') as f:
                writer.write(f, flat_rows)
        else:
            writer.write(dest, flat_rows)
