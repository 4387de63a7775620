"""URL canonicalization.

Search hits, social posts and archive records all refer to pages by URL, and
the three channels only join if equivalent spellings collapse to one value.
Rules applied by :func:`canonicalize_url`:

* scheme and host lowercased, host IDNA-encoded, trailing host dot removed
* userinfo and fragment dropped
* default port (80 for http, 443 for https) dropped
* runs of ``/`` in the path collapsed to one; empty path becomes ``/``
* percent-escapes of unreserved characters decoded, other escapes
  uppercased, characters outside the URI grammar percent-encoded (UTF-8)
* query keys in :data:`TRACKING_PARAMS` removed, the rest keep their order
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from urllib.parse import quote, urlsplit

from .errors import MalformedUrl

TRACKING_PARAMS = frozenset(
    {
        "utm_source",
        "utm_medium",
        "utm_campaign",
        "utm_term",
        "utm_content",
        "fbclid",
        "gclid",
    }
)

DEFAULT_PORTS = {"http": 80, "https": 443}

_UNRESERVED = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-._~"
_SUB_DELIMS = "!$&'()*+,;="
_PATH_SAFE = _SUB_DELIMS + ":@/%"
# '&' and '=' are structural inside a query and must stay escaped in parts.
_QUERY_PART_SAFE = "!$'()*+,;:@/?%"

_ESCAPE = re.compile(r"%([0-9A-Fa-f]{2})")
_BAD_PERCENT = re.compile(r"%(?![0-9A-Fa-f]{2})")
_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*$")


@dataclass(frozen=True)
class CanonicalUrl:
    scheme: str
    host: str
    port: int | None
    path: str
    query: tuple[tuple[str, str | None], ...] = ()

    def __str__(self) -> str:
        netloc = self.host if self.port is None else f"{self.host}:{self.port}"
        out = f"{self.scheme}://{netloc}{self.path}"
        if self.query:
            out += "?" + "&".join(k if v is None else f"{k}={v}" for k, v in self.query)
        return out

    @property
    def digest(self) -> str:
        """Short stable key used in fixture and cache file names."""
        return url_hash(str(self))


def url_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _normalize_escapes(text: str, safe: str) -> str:
    text = quote(text, safe=_UNRESERVED + safe)
    text = _BAD_PERCENT.sub("%25", text)

    def fix(m: re.Match) -> str:
        ch = chr(int(m.group(1), 16))
        return ch if ch in _UNRESERVED else "%" + m.group(1).upper()

    return _ESCAPE.sub(fix, text)


_HOST_CHARS = re.compile(r"^[a-z0-9_.-]+$")
_IPV6_CHARS = re.compile(r"^[0-9a-f:.]+$")


def _canonical_host(hostname: str) -> str:
    host = hostname.lower().rstrip(".")
    if not host:
        return ""
    if ":" in host:  # IPv6 literal; urlsplit has already removed the brackets
        if not _IPV6_CHARS.match(host):
            raise MalformedUrl(f"invalid host {hostname!r}")
        return f"[{host}]"
    if not host.isascii():
        try:
            host = host.encode("idna").decode("ascii")
        except UnicodeError as exc:
            raise MalformedUrl(f"invalid host {hostname!r}") from exc
    if not _HOST_CHARS.match(host):
        raise MalformedUrl(f"invalid host {hostname!r}")
    return host


def _split_query(query: str) -> tuple[tuple[str, str | None], ...]:
    pairs = []
    for part in query.split("&"):
        if not part:
            continue
        if "=" in part:
            key, value = part.split("=", 1)
            value = _normalize_escapes(value, _QUERY_PART_SAFE + "=")
        else:
            key, value = part, None
        key = _normalize_escapes(key, _QUERY_PART_SAFE)
        if key.lower() in TRACKING_PARAMS:
            continue
        pairs.append((key, value))
    return tuple(pairs)


def canonicalize_url(raw: str | CanonicalUrl) -> CanonicalUrl:
    if isinstance(raw, CanonicalUrl):
        return raw
    text = raw.strip() if raw else ""
    if not text:
        raise MalformedUrl("empty URL")
    try:
        parts = urlsplit(text)
        port = parts.port
    except ValueError as exc:
        raise MalformedUrl(f"{text!r}: {exc}") from exc
    scheme = parts.scheme.lower()
    if not scheme or not _SCHEME.match(scheme) or not parts.netloc:
        raise MalformedUrl(f"{text!r}: no scheme or host")
    host = _canonical_host(parts.hostname or "")
    if not host:
        raise MalformedUrl(f"{text!r}: no host")
    if port is not None and DEFAULT_PORTS.get(scheme) == port:
        port = None

    path = re.sub(r"/{2,}", "/", parts.path) or "/"
    path = _normalize_escapes(path, _PATH_SAFE)
    return CanonicalUrl(scheme, host, port, path, _split_query(parts.query))


def is_canonical(text: str) -> bool:
    try:
        return str(canonicalize_url(text)) == text
    except MalformedUrl:
        return False
