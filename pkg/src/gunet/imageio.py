"""Binary PPM (P6), PGM (P5), and PFM image I/O.

8-bit images map to [0, 1] on load and are clipped/quantized on save;
only maxval 255 is supported. PFM carries 32-bit floats; we write
little-endian (scale -1.0) with the format's bottom-to-top row order and
read either endianness. Tensors are (1, c, h, w) float64.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ImageFormatError


def _read_ascii_token(f) -> bytes:
    """Next whitespace-delimited token, skipping # comments."""
    tok = b""
    while True:
        ch = f.read(1)
        if not ch:
            if tok:
                return tok
            raise ImageFormatError("unexpected end of file while reading header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = f.read(1)
            continue
        if ch.isspace():
            if tok:
                return tok
            continue
        tok += ch


def _read_exact(f, count: int, path) -> bytes:
    data = f.read(count)
    if len(data) != count:
        raise ImageFormatError(
            f"{path}: truncated payload, expected {count} bytes, got {len(data)}"
        )
    return data


def _parse_int(tok: bytes, what: str, path) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ImageFormatError(f"{path}: malformed header, bad {what} {tok!r}") from None


def load_image(path) -> np.ndarray:
    """Load a PPM/PGM/PFM file as a (1, c, h, w) float64 tensor."""
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic in (b"P6", b"P5"):
            w = _parse_int(_read_ascii_token(f), "width", path)
            h = _parse_int(_read_ascii_token(f), "height", path)
            maxval = _parse_int(_read_ascii_token(f), "maxval", path)
            if maxval != 255:
                raise ImageFormatError(f"{path}: unsupported maxval {maxval} (only 255)")
            if w <= 0 or h <= 0:
                raise ImageFormatError(f"{path}: bad dimensions {w}x{h}")
            channels = 3 if magic == b"P6" else 1
            raw = _read_exact(f, w * h * channels, path)
            img = np.frombuffer(raw, dtype=np.uint8).reshape(h, w, channels)
            return np.ascontiguousarray(
                img.transpose(2, 0, 1)[None].astype(np.float64) / 255.0
            )
        if magic in (b"PF", b"Pf"):
            channels = 3 if magic == b"PF" else 1
            w = _parse_int(_read_ascii_token(f), "width", path)
            h = _parse_int(_read_ascii_token(f), "height", path)
            scale_tok = _read_ascii_token(f)
            try:
                scale = float(scale_tok)
            except ValueError:
                raise ImageFormatError(f"{path}: malformed PFM scale {scale_tok!r}") from None
            if scale == 0:
                raise ImageFormatError(f"{path}: PFM scale must be nonzero")
            dtype = "<f4" if scale < 0 else ">f4"
            raw = _read_exact(f, w * h * channels * 4, path)
            img = np.frombuffer(raw, dtype=dtype).reshape(h, w, channels)
            img = img[::-1]  # PFM rows are stored bottom-to-top
            return np.ascontiguousarray(img.transpose(2, 0, 1)[None].astype(np.float64))
        raise ImageFormatError(f"{path}: unknown magic {magic!r} (expected P5/P6/Pf/PF)")


def save_image(tensor: np.ndarray, path) -> None:
    """Write a (1, c, h, w) tensor; format chosen by extension
    (.ppm -> P6, .pgm -> P5, .pfm -> PF or Pf by channel count)."""
    path = Path(path)
    arr = np.asarray(tensor, dtype=np.float64)
    if arr.ndim != 4 or arr.shape[0] != 1:
        raise ImageFormatError(f"save_image: expected a (1, c, h, w) tensor, got {arr.shape}")
    c, h, w = arr.shape[1], arr.shape[2], arr.shape[3]
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        if c not in (1, 3):
            raise ImageFormatError(f"save_image: PFM needs 1 or 3 channels, got {c}")
        magic = b"PF" if c == 3 else b"Pf"
        data = arr[0].transpose(1, 2, 0).astype("<f4")[::-1]
        with open(path, "wb") as f:
            f.write(magic + b"\n")
            f.write(f"{w} {h}\n".encode())
            f.write(b"-1.0\n")
            f.write(data.tobytes())
        return
    if suffix == ".ppm":
        if c != 3:
            raise ImageFormatError(f"save_image: PPM needs 3 channels, got {c}")
        magic = b"P6"
    elif suffix == ".pgm":
        if c != 1:
            raise ImageFormatError(f"save_image: PGM needs 1 channel, got {c}")
        magic = b"P5"
    else:
        raise ImageFormatError(f"save_image: unknown extension {suffix!r} (use .ppm/.pgm/.pfm)")
    quant = np.clip(np.rint(arr[0] * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(magic + b"\n")
        f.write(f"{w} {h}\n255\n".encode())
        f.write(quant.transpose(1, 2, 0).tobytes())


def save_plane_pfm(plane: np.ndarray, path) -> None:
    """Write a 2-D float plane as a grayscale PFM."""
    save_image(np.asarray(plane, dtype=np.float64)[None, None], path)


def load_plane_pfm(path) -> np.ndarray:
    t = load_image(path)
    if t.shape[1] != 1:
        raise ImageFormatError(f"{path}: expected a single-channel PFM plane")
    return t[0, 0]
