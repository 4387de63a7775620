"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class ImageSpreadError(Exception):
    """Base class for all errors raised by this package."""


# core-model

class MalformedUrl(ImageSpreadError, ValueError):
    """The text cannot identify a page (no scheme or no host)."""


class ConfigParseError(ImageSpreadError):
    pass


class ConfigValidationError(ImageSpreadError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


# imagematch

class ImageDecodeError(ImageSpreadError):
    pass


class ImageTooSmall(ImageSpreadError):
    pass


# fetch-cache

class FetchError(ImageSpreadError):
    """Network-level failure (DNS, refused connection, reset)."""

    def __init__(self, url: str, message: str = ""):
        self.url = url
        super().__init__(f"{url}: {message}" if message else url)


class FetchTimeout(FetchError):
    pass


class CacheMiss(FetchError):
    """Replay mode found neither a cache entry nor a fixture."""


class HttpError(FetchError):
    def __init__(self, url: str, status: int):
        self.status = status
        super().__init__(url, f"HTTP {status}")


# memento-client

class TimeMapSyntaxError(ImageSpreadError):
    pass


class ArchiveUnreachable(ImageSpreadError):
    def __init__(self, archive_id: str, message: str = ""):
        self.archive_id = archive_id
        super().__init__(f"{archive_id}: {message}" if message else archive_id)


class ArchiveError(ImageSpreadError):
    def __init__(self, archive_id: str, status: int):
        self.archive_id = archive_id
        self.status = status
        super().__init__(f"{archive_id}: HTTP {status}")


class AllArchivesFailed(ImageSpreadError):
    def __init__(self, errors):
        self.errors = list(errors)
        ids = ", ".join(archive_id for archive_id, _ in self.errors)
        super().__init__(f"every archive failed ({ids})")


# search-ingest / social-ingest

class AdapterParseError(ImageSpreadError):
    pass


class EngineUnavailable(ImageSpreadError):
    pass


class CaptchaDetected(EngineUnavailable):
    pass


class PlatformUnavailable(ImageSpreadError):
    pass


class UnattributedUrl(ImageSpreadError):
    pass


# cli

class MissingInput(ImageSpreadError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"missing input: {path}")
