"""Domain values shared by all stages."""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .urls import CanonicalUrl

VARIANT_ID = re.compile(r"^[a-z0-9-]{1,32}$")
URI_R_PLACEHOLDER = "{uri_r}"

ENGINES = ("baidu", "bing", "google")
PLATFORMS = ("twitter", "reddit")

DEFAULT_DATE_LOWER_BOUND = dt.date(2020, 1, 30)
DEFAULT_MATCH_THRESHOLD = 10
DEFAULT_MAX_PAGES = 10


class Channel(str, Enum):
    SEARCH = "search"
    TWITTER = "twitter"
    REDDIT = "reddit"
    ARCHIVE = "archive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ImageVariant:
    id: str
    name: str
    image_path: Path
    source_attribution: str = ""
    seed_note: str = ""

    def read_bytes(self) -> bytes:
        return Path(self.image_path).read_bytes()


@dataclass(frozen=True)
class Archive:
    id: str
    timemap: str

    def timemap_url(self, uri_r: CanonicalUrl | str) -> str:
        return self.timemap.replace(URI_R_PLACEHOLDER, str(uri_r))


@dataclass(frozen=True)
class StudyConfig:
    variants: tuple[ImageVariant, ...]
    name: str = "study"
    date_lower_bound: dt.date = DEFAULT_DATE_LOWER_BOUND
    engines: tuple[str, ...] = ENGINES
    platforms: tuple[str, ...] = PLATFORMS
    archives: tuple[Archive, ...] = ()
    news_domain_list_path: Path | None = None
    match_threshold: int = DEFAULT_MATCH_THRESHOLD
    max_pages: int = DEFAULT_MAX_PAGES
    seed_window: tuple[dt.date, dt.date] | None = None
    fixtures: Path | None = None
    author_salt: str = ""
    granularity: str = "month"

    def variant(self, variant_id: str) -> ImageVariant:
        for v in self.variants:
            if v.id == variant_id:
                return v
        raise KeyError(variant_id)


@dataclass(frozen=True)
class ChannelEvent:
    """One observation of a page in one channel, attributed to a variant."""

    variant_id: str
    channel: Channel
    canonical_url: CanonicalUrl
    timestamp: dt.datetime | None = None
    detail: str = ""
