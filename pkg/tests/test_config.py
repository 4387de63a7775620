from __future__ import annotations

import datetime as dt

import pytest
import tomli

from conftest import STUDY
from imagespread.config import dump_study_config, load_study_config, parse_study_config
from imagespread.errors import ConfigParseError, ConfigValidationError


def _write(tmp_path, text):
    path = tmp_path / "study.toml"
    path.write_text(text, encoding="utf-8")
    return path


def _variants(n, image="variant.png"):
    return "\n".join(f'[[variants]]\nid = "v{i}"\nimage = "{image}"\n' for i in range(n))


def test_five_variants_and_bound(tmp_path, png_file):
    path = _write(tmp_path, "date_lower_bound = 2020-01-30\n" + _variants(5))
    cfg = load_study_config(path)
    assert len(cfg.variants) == 5
    assert cfg.date_lower_bound == dt.date(2020, 1, 30)


def test_defaults(tmp_path, png_file):
    cfg = load_study_config(_write(tmp_path, _variants(1)))
    assert cfg.match_threshold == 10
    assert cfg.max_pages == 10
    assert cfg.date_lower_bound == dt.date(2020, 1, 30)
    assert cfg.engines == ("baidu", "bing", "google")
    assert cfg.platforms == ("twitter", "reddit")
    assert cfg.archives == ()
    assert cfg.granularity == "month"
    assert cfg.variants[0].image_path == png_file
    assert cfg.variants[0].name == "v0"


def test_zero_variants(tmp_path):
    with pytest.raises(ConfigValidationError) as err:
        load_study_config(_write(tmp_path, 'name = "x"\n'))
    assert err.value.field == "variants"


@pytest.mark.parametrize(
    "extra, field",
    [
        ("match_threshold = 65\n", "match_threshold"),
        ("match_threshold = -1\n", "match_threshold"),
        ("max_pages = 0\n", "max_pages"),
        ('engines = ["altavista"]\n', "engines"),
        ('platforms = ["twitter", "twitter"]\n', "platforms"),
        ('granularity = "day"\n', "granularity"),
        ('date_lower_bound = "last year"\n', "date_lower_bound"),
        ("colour = 1\n", "colour"),
        ('seed_window = {start = 2020-03-01, end = 2020-02-01}\n', "seed_window"),
    ],
)
def test_field_errors(tmp_path, png_file, extra, field):
    with pytest.raises(ConfigValidationError) as err:
        load_study_config(_write(tmp_path, extra + _variants(1)))
    assert err.value.field == field
    assert field in str(err.value)


def test_variant_errors(tmp_path, png_file):
    bad_id = '[[variants]]\nid = "Has Space"\nimage = "variant.png"\n'
    with pytest.raises(ConfigValidationError, match=r"variants\[0\]\.id"):
        load_study_config(_write(tmp_path, bad_id))
    with pytest.raises(ConfigValidationError, match="duplicate"):
        load_study_config(_write(tmp_path, _variants(1) + _variants(1)))
    missing = '[[variants]]\nid = "a"\nimage = "nope.png"\n'
    with pytest.raises(ConfigValidationError, match=r"variants\[0\]\.image"):
        load_study_config(_write(tmp_path, missing))
    (tmp_path / "junk.png").write_bytes(b"not an image")
    with pytest.raises(ConfigValidationError, match=r"variants\[0\]\.image"):
        load_study_config(_write(tmp_path, '[[variants]]\nid = "a"\nimage = "junk.png"\n'))


@pytest.mark.parametrize(
    "archive",
    [
        '[[archives]]\nid = "ia"\ntimemap = "https://a.example/timemap/"\n',
        '[[archives]]\nid = "ia"\ntimemap = "https://a.example/{uri_r}/{uri_r}"\n',
        '[[archives]]\nid = "ia"\n',
        '[[archives]]\nid = "ia"\ntimemap = "https://a.example/{uri_r}"\nweight = 2\n',
    ],
)
def test_archive_errors(tmp_path, png_file, archive):
    with pytest.raises(ConfigValidationError, match="archives"):
        load_study_config(_write(tmp_path, _variants(1) + archive))


def test_parse_errors(tmp_path):
    with pytest.raises(ConfigParseError):
        load_study_config(tmp_path / "missing.toml")
    with pytest.raises(ConfigParseError):
        load_study_config(_write(tmp_path, "name = \n"))


def test_round_trip_shipped_study(tmp_path):
    cfg = load_study_config(STUDY)
    text = dump_study_config(cfg)
    again = parse_study_config(tomli.loads(text), tmp_path)
    assert again == cfg
    path = _write(tmp_path, text)
    assert load_study_config(path) == cfg
    assert dump_study_config(load_study_config(path)) == text


def test_round_trip_with_seed_window(tmp_path, png_file):
    path = _write(tmp_path, "seed_window = {start = 2020-03-01, end = 2020-03-15}\n" + _variants(2))
    cfg = load_study_config(path)
    assert cfg.seed_window == (dt.date(2020, 3, 1), dt.date(2020, 3, 15))
    assert parse_study_config(tomli.loads(dump_study_config(cfg)), tmp_path) == cfg


def test_shipped_study():
    cfg = load_study_config(STUDY)
    assert [v.id for v in cfg.variants] == ["economist", "harris", "lancet", "vox", "illinois"]
    assert [a.id for a in cfg.archives] == ["ia", "arquivo", "ukwa"]
    assert cfg.archives[0].timemap_url("https://ex.com/") == "https://web.archive.example/web/timemap/link/https://ex.com/"
