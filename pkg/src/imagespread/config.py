"""Study configuration: a TOML file describing variants, channels and bounds."""

from __future__ import annotations

import datetime as dt
import hashlib
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .errors import ConfigParseError, ConfigValidationError, ImageDecodeError, ImageTooSmall
from .imagematch import luma
from .model import (
    DEFAULT_DATE_LOWER_BOUND,
    DEFAULT_MATCH_THRESHOLD,
    DEFAULT_MAX_PAGES,
    ENGINES,
    PLATFORMS,
    URI_R_PLACEHOLDER,
    VARIANT_ID,
    Archive,
    ImageVariant,
    StudyConfig,
)

TOP_LEVEL_KEYS = {
    "name",
    "date_lower_bound",
    "match_threshold",
    "max_pages",
    "engines",
    "platforms",
    "news_domain_list",
    "fixtures",
    "author_salt",
    "granularity",
    "seed_window",
    "variants",
    "archives",
}
VARIANT_KEYS = {"id", "name", "image", "source_attribution", "seed_note"}


def _date(value: Any, field: str) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    if isinstance(value, str):
        try:
            return dt.date.fromisoformat(value)
        except ValueError:
            pass
    raise ConfigValidationError(field, f"expected a YYYY-MM-DD date, got {value!r}")


def _str(table: dict, key: str, field: str, default: str | None = None) -> str:
    value = table.get(key, default)
    if not isinstance(value, str):
        raise ConfigValidationError(field, "expected a string")
    return value


def _int(table: dict, key: str, default: int, minimum: int, maximum: int | None = None) -> int:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigValidationError(key, "expected an integer")
    if value < minimum or (maximum is not None and value > maximum):
        raise ConfigValidationError(key, f"out of range: {value}")
    return value


def _names(table: dict, key: str, allowed: tuple[str, ...]) -> tuple[str, ...]:
    value = table.get(key, list(allowed))
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ConfigValidationError(key, "expected a list of strings")
    for v in value:
        if v not in allowed:
            raise ConfigValidationError(key, f"unknown adapter {v!r} (known: {', '.join(allowed)})")
    if len(set(value)) != len(value):
        raise ConfigValidationError(key, "duplicate entries")
    return tuple(value)


def _path(base: Path, value: str) -> Path:
    p = Path(value).expanduser()
    return p if p.is_absolute() else (base / p).resolve()


def _variant(raw: Any, index: int, base: Path) -> ImageVariant:
    prefix = f"variants[{index}]"
    if not isinstance(raw, dict):
        raise ConfigValidationError(prefix, "expected a table")
    unknown = set(raw) - VARIANT_KEYS
    if unknown:
        raise ConfigValidationError(f"{prefix}.{sorted(unknown)[0]}", "unknown key")
    for key in ("id", "image"):
        if key not in raw:
            raise ConfigValidationError(f"{prefix}.{key}", "required")
    vid = _str(raw, "id", f"{prefix}.id")
    if not VARIANT_ID.match(vid):
        raise ConfigValidationError(f"{prefix}.id", f"{vid!r} must match [a-z0-9-]{{1,32}}")
    image = _path(base, _str(raw, "image", f"{prefix}.image"))
    if not image.is_file():
        raise ConfigValidationError(f"{prefix}.image", f"{image} does not exist")
    try:
        luma(image)
    except (ImageDecodeError, ImageTooSmall) as exc:
        raise ConfigValidationError(f"{prefix}.image", str(exc)) from exc
    return ImageVariant(
        id=vid,
        name=_str(raw, "name", f"{prefix}.name", vid),
        image_path=image,
        source_attribution=_str(raw, "source_attribution", f"{prefix}.source_attribution", ""),
        seed_note=_str(raw, "seed_note", f"{prefix}.seed_note", ""),
    )


def _archive(raw: Any, index: int) -> Archive:
    prefix = f"archives[{index}]"
    if not isinstance(raw, dict) or set(raw) != {"id", "timemap"}:
        raise ConfigValidationError(prefix, "expected a table with exactly 'id' and 'timemap'")
    template = _str(raw, "timemap", f"{prefix}.timemap")
    if template.count(URI_R_PLACEHOLDER) != 1:
        raise ConfigValidationError(
            f"{prefix}.timemap", f"template must contain exactly one {URI_R_PLACEHOLDER}"
        )
    return Archive(_str(raw, "id", f"{prefix}.id"), template)


def parse_study_config(data: dict, base: Path) -> StudyConfig:
    unknown = set(data) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigValidationError(sorted(unknown)[0], "unknown key")

    raw_variants = data.get("variants", [])
    if not isinstance(raw_variants, list) or not raw_variants:
        raise ConfigValidationError("variants", "at least one variant is required")
    variants = tuple(_variant(v, i, base) for i, v in enumerate(raw_variants))
    ids = [v.id for v in variants]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ConfigValidationError("variants", f"duplicate id {dupes[0]!r}")

    raw_archives = data.get("archives", [])
    if not isinstance(raw_archives, list):
        raise ConfigValidationError("archives", "expected an array of tables")
    archives = tuple(_archive(a, i) for i, a in enumerate(raw_archives))
    if len({a.id for a in archives}) != len(archives):
        raise ConfigValidationError("archives", "duplicate archive id")

    seed_window = None
    if "seed_window" in data:
        sw = data["seed_window"]
        if not isinstance(sw, dict) or set(sw) != {"start", "end"}:
            raise ConfigValidationError("seed_window", "expected {start, end}")
        seed_window = (_date(sw["start"], "seed_window.start"), _date(sw["end"], "seed_window.end"))
        if seed_window[0] > seed_window[1]:
            raise ConfigValidationError("seed_window", "start is after end")

    news = data.get("news_domain_list")
    fixtures = data.get("fixtures")
    granularity = _str(data, "granularity", "granularity", "month")
    if granularity not in ("month", "week"):
        raise ConfigValidationError("granularity", "must be 'month' or 'week'")

    return StudyConfig(
        variants=variants,
        name=_str(data, "name", "name", base.name or "study"),
        date_lower_bound=_date(data.get("date_lower_bound", DEFAULT_DATE_LOWER_BOUND), "date_lower_bound"),
        engines=_names(data, "engines", ENGINES),
        platforms=_names(data, "platforms", PLATFORMS),
        archives=archives,
        news_domain_list_path=_path(base, _str(data, "news_domain_list", "news_domain_list")) if news is not None else None,
        match_threshold=_int(data, "match_threshold", DEFAULT_MATCH_THRESHOLD, 0, 64),
        max_pages=_int(data, "max_pages", DEFAULT_MAX_PAGES, 1),
        seed_window=seed_window,
        fixtures=_path(base, _str(data, "fixtures", "fixtures")) if fixtures is not None else None,
        author_salt=_str(data, "author_salt", "author_salt", ""),
        granularity=granularity,
    )


def load_study_config(path: str | Path) -> StudyConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigParseError(f"{path}: {exc.strerror or exc}") from exc
    try:
        data = tomli.loads(raw.decode("utf-8"))
    except (tomli.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc
    return parse_study_config(data, path.resolve().parent)


def config_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def dump_study_config(cfg: StudyConfig) -> str:
    """Serialize with absolute paths so the text loads back to an equal value."""
    data: dict[str, Any] = {
        "name": cfg.name,
        "date_lower_bound": cfg.date_lower_bound,
        "match_threshold": cfg.match_threshold,
        "max_pages": cfg.max_pages,
        "engines": list(cfg.engines),
        "platforms": list(cfg.platforms),
        "author_salt": cfg.author_salt,
        "granularity": cfg.granularity,
    }
    if cfg.news_domain_list_path is not None:
        data["news_domain_list"] = str(cfg.news_domain_list_path)
    if cfg.fixtures is not None:
        data["fixtures"] = str(cfg.fixtures)
    if cfg.seed_window is not None:
        data["seed_window"] = {"start": cfg.seed_window[0], "end": cfg.seed_window[1]}
    data["variants"] = [
        {
            "id": v.id,
            "name": v.name,
            "image": str(v.image_path),
            "source_attribution": v.source_attribution,
            "seed_note": v.seed_note,
        }
        for v in cfg.variants
    ]
    if cfg.archives:
        data["archives"] = [{"id": a.id, "timemap": a.timemap} for a in cfg.archives]
    return tomli_w.dumps(data)
