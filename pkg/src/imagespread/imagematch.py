"""Perceptual hashing and same-image matching.

Both hashes work on an integer luma plane and an exact area-weighted box
filter, so every intermediate of the resize is an integer and the hashes are
bit-reproducible across platforms and BLAS builds.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Iterable, Union
from urllib.parse import urljoin

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageDecodeError, ImageSpreadError, ImageTooSmall, MalformedUrl
from .urls import CanonicalUrl, canonicalize_url

log = logging.getLogger(__name__)

MIN_SIDE = 8
CROP_RATIOS = (1.0, 0.9, 0.8)
HASH_KINDS = ("dhash", "phash")
# phash coefficients are rounded before the median test; removes float noise
# (a constant image has AC terms around 1e-13 that must compare equal to 0).
_PHASH_DECIMALS = 6

Raster = Union[bytes, bytearray, str, Path, Image.Image, np.ndarray]


@dataclass(frozen=True)
class Hash64:
    bits: int
    kind: str

    def __post_init__(self):
        if self.kind not in HASH_KINDS:
            raise ValueError(f"unknown hash kind {self.kind!r}")
        if not 0 <= self.bits < 1 << 64:
            raise ValueError("hash must fit in 64 bits")

    def __str__(self) -> str:
        return f"{self.kind}:{self.bits:016x}"


@dataclass(frozen=True)
class MatchResult:
    distance: int
    matched: bool
    kind: str


def hamming(a: Hash64, b: Hash64) -> int:
    if a.kind != b.kind:
        raise ValueError(f"cannot compare {a.kind} with {b.kind}")
    return (a.bits ^ b.bits).bit_count()


def _open(image: Raster) -> Image.Image:
    if isinstance(image, Image.Image):
        return image
    try:
        if isinstance(image, (bytes, bytearray)):
            img = Image.open(io.BytesIO(image))
        else:
            img = Image.open(image)
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageDecodeError(str(exc)) from exc
    if img.format not in ("PNG", "JPEG"):
        raise ImageDecodeError(f"unsupported image format {img.format}")
    return img


def luma(image: Raster) -> np.ndarray:
    """Integer grayscale plane, ``(r*299 + g*587 + b*114) // 1000``."""
    if isinstance(image, np.ndarray):
        arr = image
        if arr.ndim == 3:
            arr = arr[..., :3].astype(np.int64)
            arr = (arr[..., 0] * 299 + arr[..., 1] * 587 + arr[..., 2] * 114) // 1000
        arr = arr.astype(np.int64)
    else:
        rgb = np.asarray(_open(image).convert("RGB"), dtype=np.int64)
        arr = (rgb[..., 0] * 299 + rgb[..., 1] * 587 + rgb[..., 2] * 114) // 1000
    h, w = arr.shape
    if h < MIN_SIDE or w < MIN_SIDE:
        raise ImageTooSmall(f"{w}x{h} is below {MIN_SIDE}x{MIN_SIDE}")
    return arr


def _overlap_matrix(src: int, dst: int) -> np.ndarray:
    # Source pixel k spans [k*dst, (k+1)*dst) and target cell i spans
    # [i*src, (i+1)*src) on a common integer axis; entries are overlaps.
    k = np.arange(src)
    i = np.arange(dst)[:, None]
    lo = np.maximum(k * dst, i * src)
    hi = np.minimum((k + 1) * dst, (i + 1) * src)
    return np.clip(hi - lo, 0, None).astype(np.float64)


def box_sums(gray: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Area-weighted box resize, returned as exact integer-valued sums.

    Every output cell carries the same total weight ``H*W``, so dividing by it
    yields the cell mean; comparisons can use the sums directly.
    """
    h, w = gray.shape
    rows = _overlap_matrix(h, out_h)
    cols = _overlap_matrix(w, out_w)
    return rows @ gray.astype(np.float64) @ cols.T


def _pack(bits: Iterable[bool]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(bool(b))
    return value


def dhash(image: Raster) -> Hash64:
    sums = box_sums(luma(image), 8, 9)
    return Hash64(_pack((sums[:, :-1] < sums[:, 1:]).ravel()), "dhash")


def _dct_matrix(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * x + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    m[0, :] = np.sqrt(1.0 / n)
    return m


_DCT32 = _dct_matrix(32)


def phash(image: Raster) -> Hash64:
    """DCT hash; the DC bit is always 0 and the DC term is left out of the median."""
    gray = luma(image)
    mean = box_sums(gray, 32, 32) / float(gray.shape[0] * gray.shape[1])
    coeffs = (_DCT32 @ mean @ _DCT32.T)[:8, :8].ravel()
    coeffs = np.round(coeffs, _PHASH_DECIMALS)
    median = np.median(coeffs[1:])
    bits = coeffs > median
    bits[0] = False
    return Hash64(_pack(bits), "phash")


HASHERS: dict[str, Callable[[Raster], Hash64]] = {"dhash": dhash, "phash": phash}


def center_crop(gray: np.ndarray, ratio: float) -> np.ndarray:
    if ratio >= 1.0:
        return gray
    h, w = gray.shape
    ch = max(MIN_SIDE, int(round(h * ratio)))
    cw = max(MIN_SIDE, int(round(w * ratio)))
    top = (h - ch) // 2
    left = (w - cw) // 2
    return gray[top : top + ch, left : left + cw]


def crop_hashes(image: Raster, ratios: Iterable[float] = CROP_RATIOS) -> list[Hash64]:
    """Hashes of every kind for each center crop; reusable across comparisons."""
    gray = luma(image)
    out = []
    for r in ratios:
        crop = center_crop(gray, r)
        out.extend(hasher(crop) for hasher in HASHERS.values())
    return out


def best_distance(query: list[Hash64], candidate: list[Hash64]) -> tuple[int, str]:
    best = (65, "dhash")
    for q in query:
        for c in candidate:
            if q.kind == c.kind:
                d = hamming(q, c)
                if (d, q.kind) < best:
                    best = (d, q.kind)
    return best


def match_thumbnail(
    query: Raster,
    candidate: Raster,
    threshold: int,
    ratios: Iterable[float] = CROP_RATIOS,
) -> MatchResult:
    """Same-image test tolerant to resizing and moderate cropping.

    The minimum distance is taken over both hash kinds and over center crops
    of *both* images, so a thumbnail that is a crop of the query and a
    thumbnail that shows extra border around it are both caught.
    """
    ratios = tuple(ratios)
    q = query if isinstance(query, list) else crop_hashes(query, ratios)
    c = candidate if isinstance(candidate, list) else crop_hashes(candidate, ratios)
    distance, kind = best_distance(q, c)
    return MatchResult(distance, distance <= threshold, kind)


class _ImageRefParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.refs: list[str] = []

    def handle_starttag(self, tag, attrs):
        a = {k.lower(): v for k, v in attrs if v is not None}
        if tag == "img":
            if a.get("src"):
                self.refs.append(a["src"])
            if a.get("srcset"):
                self.refs.extend(parse_srcset(a["srcset"]))
        elif tag == "source" and a.get("srcset"):
            self.refs.extend(parse_srcset(a["srcset"]))
        elif tag == "meta" and a.get("property", "").lower() == "og:image":
            if a.get("content"):
                self.refs.append(a["content"])

    handle_startendtag = handle_starttag


def parse_srcset(value: str) -> list[str]:
    """Candidate URLs of a ``srcset`` attribute, descriptors discarded."""
    urls = []
    i, n = 0, len(value)
    while i < n:
        while i < n and (value[i].isspace() or value[i] == ","):
            i += 1
        start = i
        while i < n and not value[i].isspace():
            i += 1
        url = value[start:i]
        if url.endswith(","):
            url = url.rstrip(",")
        else:
            while i < n and value[i] != ",":
                i += 1
        if url:
            urls.append(url)
    return urls


def extract_image_urls(html: str, base: CanonicalUrl | str) -> list[CanonicalUrl]:
    parser = _ImageRefParser()
    try:
        parser.feed(html or "")
        parser.close()
    except Exception:  # html.parser is lenient; stay best-effort regardless
        log.debug("html parse aborted for %s", base, exc_info=True)
    out: list[CanonicalUrl] = []
    seen = set()
    for ref in parser.refs:
        ref = ref.strip()
        if not ref or ref.lower().startswith(("data:", "javascript:", "blob:")):
            continue
        try:
            url = canonicalize_url(urljoin(str(base), ref))
        except MalformedUrl:
            continue
        if url.scheme not in ("http", "https") or url in seen:
            continue
        seen.add(url)
        out.append(url)
    return out


@dataclass(frozen=True)
class VerificationResult:
    verified: bool
    evidence_url: CanonicalUrl | None
    failures: int
    checked: int = 0


def verify_page_contains_image(
    page_html: str,
    base: CanonicalUrl | str,
    query: Raster | list[Hash64],
    fetch: Callable[[str], bytes],
    threshold: int,
) -> VerificationResult:
    """Look for the query image among the images a page embeds.

    ``fetch`` returns the bytes of a URL or raises. Failed fetches and
    undecodable images are counted, not raised: archived pages routinely lose
    embedded images.
    """
    q = query if isinstance(query, list) else crop_hashes(query)
    failures = 0
    checked = 0
    for url in extract_image_urls(page_html, base):
        try:
            data = fetch(str(url))
            result = match_thumbnail(q, data, threshold)
        except (ImageSpreadError, OSError) as exc:
            log.debug("image %s unusable: %s", url, exc)
            failures += 1
            continue
        checked += 1
        if result.matched:
            return VerificationResult(True, url, failures, checked)
    return VerificationResult(False, None, failures, checked)
