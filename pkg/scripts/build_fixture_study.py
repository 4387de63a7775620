"""Generate the miniature epidemic-curve chart fixture study under studies/ftc-mini.

Everything is authored here from fixed seeds: five synthetic chart variants,
reverse-image-search result pages (with thumbnails), social search payloads,
archive TimeMaps and the web pages the verify stage fetches. The authored
expectations are written to ``truth.json`` next to the study.

This script does not import imagespread; fixture paths are spelled out with
hashlib so that the layout itself is checked when the pipeline reads it.

    python3 scripts/build_fixture_study.py [--out studies/ftc-mini]
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import html
import io
import json
import random
import shutil
from collections import Counter, defaultdict
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

CAPTURED_AT = "2023-01-15T12:00:00Z"
BOUND = dt.datetime(2020, 1, 30, tzinfo=dt.timezone.utc)
VARIANTS = ["economist", "harris", "lancet", "vox", "illinois"]
ENGINES = ["bing", "google", "baidu"]
PLATFORMS = ["twitter", "reddit"]
ARCHIVES = {
    "ia": "https://web.archive.example/web/timemap/link/{uri_r}",
    "arquivo": "https://arquivo.example.pt/wayback/timemap/link/{uri_r}",
    "ukwa": "https://www.webarchive.example.uk/wayback/archive/timemap/link/{uri_r}",
}
CDN = "https://cdn.ftc-charts.example.net"
REDDIT_START = dt.datetime(2022, 11, 1, tzinfo=dt.timezone.utc)

NEWS_DOMAINS = [
    "nytimes.com",
    "washingtonpost.com",
    "cnn.com",
    "npr.org",
    "latimes.com",
    "usatoday.com",
    "nbcnews.com",
    "cbsnews.com",
    "politico.com",
    "axios.com",
    "statnews.com",
    "bostonglobe.com",
    "seattletimes.com",
    "chicagotribune.com",
    "vox.com",
    "businessinsider.com",
    "theguardian.com",
    "bbc.co.uk",
]


def sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def h16(text: str) -> str:
    return sha(text)[:16]


def write(path: Path, data: bytes | str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.write_bytes(data)


def write_json(path: Path, obj) -> None:
    write(path, json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def iso(t: dt.datetime) -> str:
    return t.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def month(t: dt.datetime) -> str:
    return t.strftime("%Y-%m")


# ---------------------------------------------------------------- images


def _curve(x, peak, width, height):
    return height * np.exp(-(((x - peak) / width) ** 2))


def _polyline(x0, y0, w, h, xs, ys):
    return [(x0 + float(a) * w, y0 + h - float(b) * h) for a, b in zip(xs, ys)]


def draw_variant(vid: str) -> Image.Image:
    """Synthetic two-curve charts, laid out differently per variant."""
    W, H = 480, 320
    xs = np.linspace(0, 1, 200)
    if vid == "economist":
        img = Image.new("RGB", (W, H), (233, 241, 246))
        d = ImageDraw.Draw(img)
        d.rectangle([0, 0, 60, 14], fill=(227, 18, 11))
        d.rectangle([20, 30, 300, 44], fill=(40, 40, 40))
        x0, y0, w, h = 30, 70, 430, 220
        a = _curve(xs, 0.42, 0.10, 0.95)
        b = _curve(xs, 0.68, 0.20, 0.38)
        d.polygon(_polyline(x0, y0, w, h, xs, a) + [(x0 + w, y0 + h), (x0, y0 + h)], fill=(227, 18, 11))
        d.polygon(_polyline(x0, y0, w, h, xs, b) + [(x0 + w, y0 + h), (x0, y0 + h)], fill=(0, 109, 174))
        d.line([(x0, y0 + h), (x0 + w, y0 + h)], fill=(0, 0, 0), width=3)
    elif vid == "harris":
        img = Image.new("RGB", (W, H), (255, 255, 255))
        d = ImageDraw.Draw(img)
        x0, y0, w, h = 40, 40, 420, 240
        a = _curve(xs, 0.25, 0.09, 0.92)
        b = _curve(xs, 0.50, 0.20, 0.40)
        d.polygon(_polyline(x0, y0, w, h, xs, a) + [(x0 + w, y0 + h), (x0, y0 + h)], fill=(244, 164, 96))
        d.polygon(_polyline(x0, y0, w, h, xs, b) + [(x0 + w, y0 + h), (x0, y0 + h)], fill=(70, 130, 200))
        cap = y0 + h - 0.45 * h
        for x in range(x0, x0 + w, 16):
            d.line([(x, cap), (x + 9, cap)], fill=(20, 20, 20), width=3)
        d.rectangle([300, 60, 440, 72], fill=(90, 90, 90))
        d.rectangle([300, 80, 420, 90], fill=(150, 150, 150))
        d.line([(x0, y0), (x0, y0 + h)], fill=(0, 0, 0), width=3)
        d.line([(x0, y0 + h), (x0 + w, y0 + h)], fill=(0, 0, 0), width=3)
    elif vid == "lancet":
        img = Image.new("RGB", (W, H), (18, 32, 70))
        d = ImageDraw.Draw(img)
        x0, y0, w, h = 20, 30, 440, 260
        a = _curve(xs, 0.20, 0.07, 0.85) + _curve(xs, 0.72, 0.08, 0.60)
        b = _curve(xs, 0.35, 0.18, 0.30) + _curve(xs, 0.80, 0.12, 0.25)
        d.line(_polyline(x0, y0, w, h, xs, a), fill=(255, 220, 90), width=6)
        d.line(_polyline(x0, y0, w, h, xs, b), fill=(120, 220, 255), width=6)
        for fx in (0.45, 0.62):
            d.line([(x0 + fx * w, y0), (x0 + fx * w, y0 + h)], fill=(200, 200, 200), width=2)
    elif vid == "vox":
        img = Image.new("RGB", (W, H), (255, 242, 0))
        d = ImageDraw.Draw(img)
        d.rectangle([0, H - 60, W, H], fill=(20, 20, 20))
        x0, y0, w, h = 20, 20, 440, 220
        a = _curve(xs, 0.62, 0.08, 0.95)
        b = _curve(xs, 0.70, 0.20, 0.45)
        d.polygon(_polyline(x0, y0, w, h, xs, b) + [(x0 + w, y0 + h), (x0, y0 + h)], fill=(110, 40, 160))
        d.line(_polyline(x0, y0, w, h, xs, a), fill=(220, 30, 60), width=7)
    elif vid == "illinois":
        img = Image.new("RGB", (W, H), (245, 245, 245))
        d = ImageDraw.Draw(img)
        d.rectangle([0, 0, 170, H], fill=(19, 41, 75))
        for i in range(5):
            d.rectangle([18, 40 + 34 * i, 150, 54 + 34 * i], fill=(232, 74, 39))
        x0, y0, w, h = 190, 40, 270, 250
        a = _curve(xs, 0.30, 0.10, 0.90)
        b = _curve(xs, 0.55, 0.25, 0.35)
        d.polygon(_polyline(x0, y0, w, h, xs, a) + [(x0 + w, y0 + h), (x0, y0 + h)], fill=(232, 74, 39))
        d.polygon(_polyline(x0, y0, w, h, xs, b) + [(x0 + w, y0 + h), (x0, y0 + h)], fill=(19, 41, 75))
    else:
        raise ValueError(vid)
    return img


def png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False)
    return buf.getvalue()


def jpeg_bytes(img: Image.Image, quality: int) -> bytes:
    buf = io.BytesIO()
    img.convert("RGB").save(buf, format="JPEG", quality=quality)
    return buf.getvalue()


def thumbnail(img: Image.Image, width: int, crop: float = 1.0, quality: int = 85) -> bytes:
    if crop < 1.0:
        W, H = img.size
        cw, ch = int(W * crop), int(H * crop)
        left, top = (W - cw) // 2, (H - ch) // 2
        img = img.crop((left, top, left + cw, top + ch))
    W, H = img.size
    img = img.resize((width, max(8, round(H * width / W))), Image.LANCZOS)
    return jpeg_bytes(img, quality)


def noise_image(rng: random.Random, w: int = 200, h: int = 140) -> bytes:
    arr = np.array([rng.randrange(256) for _ in range(w * h * 3)], dtype=np.uint8).reshape(h, w, 3)
    return jpeg_bytes(Image.fromarray(arr, "RGB"), 80)


def logo_png() -> bytes:
    img = Image.new("RGB", (120, 40), (255, 255, 255))
    d = ImageDraw.Draw(img)
    d.ellipse([4, 4, 36, 36], fill=(200, 30, 30))
    d.rectangle([46, 14, 114, 26], fill=(30, 30, 30))
    return png_bytes(img)


# ---------------------------------------------------------------- pages

# key -> (canonical url, owner profile used for social/archive timing)
PAGES: dict[str, str] = {
    # news pages
    "nyt-curve": "https://www.nytimes.com/2020/03/11/science/coronavirus-curve-mitigation-infection.html",
    "wapo-sim": "https://www.washingtonpost.com/graphics/2020/world/corona-simulator/",
    "cnn-ftc": "https://edition.cnn.com/2020/03/12/health/flatten-the-curve-coronavirus/index.html",
    "npr-ftc": "https://www.npr.org/sections/health-shots/2020/03/13/815502262/flattening-a-pandemics-curve",
    "lat-ftc": "https://www.latimes.com/science/story/2020-03-12/flatten-the-curve",
    "usat-ftc": "https://www.usatoday.com/story/news/health/2020/03/13/flatten-curve-coronavirus/5033142002/",
    "nbc-ftc": "https://www.nbcnews.com/health/health-news/flatten-curve-n1157231",
    "cbs-ftc": "https://www.cbsnews.com/news/flatten-the-curve-coronavirus-covid-19/",
    "politico-ftc": "https://www.politico.com/news/2020/03/14/flatten-curve-coronavirus-129073",
    "axios-ftc": "https://www.axios.com/coronavirus-flatten-the-curve-4c5b9a1e.html",
    "stat-ftc": "https://www.statnews.com/2020/03/12/flatten-the-curve/",
    "globe-ftc": "https://www.bostonglobe.com/2020/03/15/nation/flatten-curve/",
    "seattle-ftc": "https://www.seattletimes.com/seattle-news/health/what-flattening-the-curve-means/",
    "trib-ftc": "https://graphics.chicagotribune.com/coronavirus/flatten-the-curve/",
    "vox-ftc": "https://www.vox.com/2020/3/10/21171480/coronavirus-flatten-the-curve",
    "atlantic-ftc": "https://www.theatlantic.com/health/archive/2020/03/flatten-curve/607720/",
    "bi-ftc": "https://www.businessinsider.com/coronavirus-flatten-the-curve-chart-2020-3",
    "guardian-ftc": "https://www.theguardian.com/world/2020/mar/14/coronavirus-flatten-the-curve",
    "bbc-ftc": "https://www.bbc.co.uk/news/health-51827371",
    "lancet-news": "https://www.statnews.com/2020/08/20/second-wave-curve/",
    # other pages
    "wiki": "https://en.wikipedia.org/wiki/Flattening_the_curve",
    "medium-ftc": "https://medium.com/@epi.notes/why-we-flatten-the-curve-3f2a9c",
    "harvard-blog": "https://www.health.harvard.edu/blog/flattening-the-curve-2020031119221",
    "phish-nyt": "https://nytimes.com.mirror-news.example/2020/03/11/curve.html",
    "city-covid": "https://www.springfield.example.gov/covid-19/flatten",
    "drew-site": "https://drewaharris.example.com/flatten-the-curve",
    "epi-course": "https://sites.example.edu/epi101/ftc",
    "blog-one": "https://blog.datasketch.example.org/2020/03/curves",
    "forum-ftc": "https://forum.example.net/t/flatten-the-curve/4411",
    "econ-blog": "https://www.economist.com/graphic-detail/2020/02/29/covid-19-is-now-in-50-countries",
    "econ-mirror": "https://economist-charts.example.com/covid/ftc",
    "thelancet": "https://www.thelancet.com/journals/lancet/article/PIIS0140-6736(20)30567-5/fulltext",
    "lancet-pdf": "https://www.researchgate.example.net/publication/lancet-ftc",
    "lancet-blog": "https://blog.publichealth.example.org/2020/07/second-curve",
    "vox-mirror": "https://voxcharts.example.net/ftc",
    "illinois-edu": "https://www.illinois.edu/covid/flatten-curve",
    "illinois-news": "https://news.illinois.example.edu/view/6367/flatten",
    "slides": "https://slides.example.com/d/ftc-lecture",
    "pinterest": "https://www.pinterest.example.com/pin/88211",
    # only ever returned with a non-matching thumbnail
    "decoy-a": "https://stock.example.com/photo/line-chart-9921",
    "decoy-b": "https://clipart.example.org/curves/bell-curve",
    "decoy-c": "https://www.lancet-lookalike.example.net/graph",
}
NEWS_KEYS = {
    k for k, u in PAGES.items()
    if any(u.split("/")[2] == d or u.split("/")[2].endswith("." + d) for d in NEWS_DOMAINS + ["theatlantic.com"])
}

# Alternative spellings of canonical page URLs as engines print them.
SPELLINGS = {
    "nyt-curve": PAGES["nyt-curve"] + "?utm_source=bing&utm_medium=images",
    "cnn-ftc": "HTTPS://Edition.CNN.com:443/2020/03/12/health/flatten-the-curve-coronavirus/index.html#main",
    "wiki": "https://en.wikipedia.org//wiki/Flattening_the_curve",
    "axios-ftc": PAGES["axios-ftc"] + "?fbclid=IwAR0xyz",
}

# per (variant, engine): list of (page key, spelling key or None, thumb mode)
# thumb modes: m=matching thumb, c=cropped matching thumb, n=noise decoy,
# o:<variant>=other variant's chart, x=thumb url without recorded file,
# -=no thumbnail element.
HARRIS_NEWS = ["nyt-curve", "wapo-sim", "cnn-ftc", "npr-ftc", "lat-ftc", "usat-ftc", "nbc-ftc", "cbs-ftc",
               "politico-ftc", "axios-ftc", "stat-ftc", "globe-ftc", "seattle-ftc", "trib-ftc"]
RESULTS: dict[tuple[str, str], list[tuple[str, str | None, str]]] = {
    ("economist", "bing"): [
        ("econ-blog", None, "m"), ("nyt-curve", None, "m"), ("guardian-ftc", None, "c"), ("bbc-ftc", None, "m"),
        ("econ-mirror", None, "m"), ("bi-ftc", None, "m"), ("forum-ftc", None, "m"), ("pinterest", None, "x"),
        ("decoy-a", None, "n"),
    ],
    ("economist", "google"): [
        ("econ-blog", None, "m"), ("guardian-ftc", None, "m"), ("bbc-ftc", None, "c"), ("atlantic-ftc", None, "m"),
        ("econ-mirror", None, "m"), ("wiki", None, "m"), ("nyt-curve", None, "m"),
    ],
    ("economist", "baidu"): [
        ("econ-blog", None, "m"), ("econ-mirror", None, "m"), ("bi-ftc", None, "m"), ("forum-ftc", None, "-"),
    ],
    ("harris", "bing"): (
        [(k, None, "m" if i % 3 else "c") for i, k in enumerate(HARRIS_NEWS[:12])]
        + [("nyt-curve", "nyt-curve", "m")]  # tracking-param duplicate of the first hit
        + [("wiki", None, "m"), ("medium-ftc", None, "m"), ("harvard-blog", None, "c"),
           ("phish-nyt", None, "m"), ("city-covid", None, "m"), ("drew-site", None, "m"),
           ("decoy-c", None, "o:lancet"), ("slides", None, "x")]
    ),
    ("harris", "google"): (
        [("cnn-ftc", "cnn-ftc", "m")]
        + [(k, None, "m" if i % 4 else "c") for i, k in enumerate(HARRIS_NEWS[3:14]) if k != "cnn-ftc"]
        + [("drew-site", None, "m"), ("wiki", "wiki", "m"), ("epi-course", None, "m"), ("blog-one", None, "m"),
           ("harvard-blog", None, "m"), ("decoy-b", None, "n")]
    ),
    ("harris", "baidu"): (
        [(k, None, "m") for k in HARRIS_NEWS[::2]]
        + [("drew-site", None, "m"), ("wiki", None, "c"), ("city-covid", None, "m")]
    ),
    ("lancet", "bing"): [
        ("thelancet", None, "m"), ("lancet-news", None, "m"), ("lancet-pdf", None, "c"), ("lancet-blog", None, "m"),
        ("guardian-ftc", None, "m"), ("decoy-a", None, "o:harris"),
    ],
    ("lancet", "google"): [
        ("thelancet", None, "m"), ("lancet-blog", None, "m"), ("lancet-news", None, "m"), ("axios-ftc", "axios-ftc", "m"),
    ],
    ("lancet", "baidu"): [("thelancet", None, "m"), ("lancet-pdf", None, "m")],
    ("vox", "bing"): [
        ("vox-ftc", None, "m"), ("vox-mirror", None, "c"), ("forum-ftc", None, "m"), ("pinterest", None, "m"),
    ],
    ("vox", "google"): [("vox-ftc", None, "m"), ("vox-mirror", None, "m"), ("atlantic-ftc", None, "m")],
    ("vox", "baidu"): [("vox-ftc", None, "m"), ("vox-mirror", None, "m")],
    ("illinois", "bing"): [("illinois-edu", None, "m"), ("illinois-news", None, "m"), ("slides", None, "c")],
    ("illinois", "google"): [("illinois-edu", None, "m"), ("illinois-news", None, "-")],
    ("illinois", "baidu"): [],
}
PAGE_SIZE = {"bing": 8, "google": 10, "baidu": 30}


def page_url_for(key: str, spelling: str | None) -> str:
    return SPELLINGS[spelling] if spelling else PAGES[key]


def thumb_url(engine: str, vid: str, idx: int, key: str) -> str:
    tag = h16(f"{engine}/{vid}/{idx}/{key}")
    if engine == "bing":
        return f"https://tse{idx % 4 + 1}.mm.bing.net/th?id=OIP.{tag}&pid=Api"
    if engine == "google":
        return f"https://encrypted-tbn0.gstatic.com/images?q=tbn:ANd9Gc{tag}"
    return f"https://mms{idx % 3}.baidu.com/it/u={int(tag[:8], 16)},{int(tag[8:], 16) % 99991}&fm=253&fmt=auto"


def esc(text: str) -> str:
    return html.escape(text, quote=True)


def bing_page(entries, page_no, last) -> str:
    items = "\n".join(
        f'      <li class="pi-item"><a class="pi-link" href="{esc(u)}" h="ID=SERP,{5000 + i}">'
        f"{esc(title)}</a>"
        + (f'<img class="pi-thumb" src="{esc(t)}" alt="">' if t else "")
        + f'<span class="pi-domain">{esc(u.split("/")[2])}</span></li>'
        for i, (u, t, title) in enumerate(entries)
    )
    nxt = (
        ""
        if last
        else f'<a class="pi-next" href="/images/search?view=detailv2&amp;insightstoken=bcid_ftc&amp;first={page_no * 8 + 1}">Next</a>'
    )
    return f"""<!DOCTYPE html>
<html lang="en"><head><meta charset="utf-8"><title>Bing Visual Search</title></head>
<body>
<header><a href="/">Bing</a><form action="/images/search"><input name="q"></form></header>
<div id="insights-root">
  <section class="pages-including"><h2>Pages including this image</h2>
    <ul>
{items}
    </ul>
  </section>
  <section class="related-images"><h2>Related content</h2>
    <ul>
      <li><a class="ri-tile" href="https://www.bing.com/images/search?q=bell+curve"><img class="ri-thumb" src="https://tse3.mm.bing.net/th?id=OIP.related1"></a></li>
      <li><a class="ri-tile" href="https://stock.example.com/photo/line-chart-9921"><img class="ri-thumb" src="https://tse3.mm.bing.net/th?id=OIP.related2"></a></li>
    </ul>
  </section>
  {nxt}
</div>
<footer><a href="https://go.microsoft.com/privacy">Privacy</a></footer>
</body></html>
"""


def google_page(entries, page_no, last) -> str:
    items = "\n".join(
        f'    <div class="g"><div class="r"><a href="{esc(u)}" ping="/url?sa=t"><h3>{esc(title)}</h3></a></div>'
        + (f'<img class="thumb" src="{esc(t)}" width="120">' if t else "")
        + f'<span class="st">{esc(u.split("/")[2])}</span></div>'
        for u, t, title in entries
    )
    nxt = "" if last else f'<a id="pnnext" href="/search?tbs=sbi:AMhZZit_ftc&amp;start={page_no * 10}">Next</a>'
    return f"""<!doctype html>
<html><head><meta charset="UTF-8"><title>Google Search</title></head>
<body>
<div id="searchform"><input name="q" value="flatten the curve"></div>
<div id="search">
  <div class="card-section">Possible related search: <a href="/search?q=flatten+the+curve">flatten the curve</a></div>
  <div id="similar-images"><h3>Visually similar images</h3>
    <div class="g"><a href="https://clipart.example.org/curves/bell-curve"><img class="thumb" src="https://encrypted-tbn0.gstatic.com/images?q=tbn:similar1"></a></div>
  </div>
  <div id="pages-with-image"><h3>Pages that include matching images</h3>
{items}
  </div>
  {nxt}
</div>
</body></html>
"""


def baidu_page(entries, page_no, last) -> str:
    items = "\n".join(
        f'    <div class="graph-same-list-item"><a class="graph-same-list-link" href="{esc(u)}" target="_blank">'
        + (f'<img src="{esc(t)}">' if t else "")
        + f'<span class="graph-same-list-title">{esc(title)}</span></a></div>'
        for u, t, title in entries
    )
    nxt = "" if last else f'<a class="graph-page-next" href="/s?sign=ftc&amp;pn={page_no}">下一页</a>'
    return f"""<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>百度识图</title></head>
<body>
<div class="graph-container">
  <div class="graph-similar-list">
    <div class="graph-similar-list-item"><a href="https://image.baidu.com/similar/1"><img src="https://mms2.baidu.com/it/u=1,2&amp;fm=253"></a></div>
  </div>
  <div class="graph-same-list">
{items}
  </div>
  {nxt}
</div>
</body></html>
"""


RENDER = {"bing": bing_page, "google": google_page, "baidu": baidu_page}


# ---------------------------------------------------------------- social / archive timing

# monthly weights per owner profile (months counted from 2020-01)
PROFILES = {
    "economist": {"2020-01": 2, "2020-02": 10, "2020-03": 12, "2020-04": 4, "2020-05": 1},
    "harris": {"2020-03": 20, "2020-04": 9, "2020-05": 4, "2020-06": 2, "2020-08": 1, "2020-11": 1},
    "lancet": {"2020-07": 4, "2020-08": 9, "2020-09": 6, "2020-10": 5, "2020-12": 3, "2021-01": 2},
    "vox": {"2020-03": 6, "2020-04": 3, "2020-06": 1},
    "illinois": {"2020-03": 2, "2020-04": 4, "2020-05": 2},
}
ARCHIVE_PROFILES = {
    "economist": {"2020-02": 6, "2020-03": 5, "2020-04": 3, "2020-06": 1},
    "harris": {
        "2020-03": 24, "2020-04": 14, "2020-05": 9, "2020-06": 6, "2020-07": 5, "2020-09": 4,
        "2020-11": 3, "2021-01": 2, "2021-03": 2, "2021-05": 1, "2021-07": 1,
    },
    "lancet": {"2020-03": 2, "2020-07": 5, "2020-08": 6, "2020-10": 3},
    "vox": {"2020-03": 4, "2020-04": 2},
    "illinois": {"2020-04": 3, "2020-05": 1},
}


def owner_of(key: str) -> str:
    for vid in ["harris", "economist", "lancet", "vox", "illinois"]:
        for engine in ENGINES:
            if any(k == key and mode in ("m", "c", "x", "-") for k, _, mode in RESULTS[(vid, engine)]):
                return vid
    raise KeyError(key)


def random_time(rng: random.Random, ym: str) -> dt.datetime:
    y, m = map(int, ym.split("-"))
    nxt = dt.datetime(y + (m == 12), m % 12 + 1, 1, tzinfo=dt.timezone.utc)
    start = dt.datetime(y, m, 1, tzinfo=dt.timezone.utc)
    secs = int((nxt - start).total_seconds())
    return start + dt.timedelta(seconds=rng.randrange(secs))


def pick_months(rng: random.Random, weights: dict[str, int], n: int) -> list[str]:
    keys = sorted(weights)
    return rng.choices(keys, weights=[weights[k] for k in keys], k=n)


def http_date(t: dt.datetime) -> str:
    return t.strftime("%a, %d %b %Y %H:%M:%S GMT")


# ---------------------------------------------------------------- build


class Builder:
    def __init__(self, out: Path):
        self.out = out
        self.fx = out / "fixtures"
        self.rng = random.Random(20200311)

    def store(self, url: str, body: bytes, status: int = 200, content_type: str = "text/html; charset=utf-8"):
        key = sha(url)
        shard = self.fx / "web" / key[:2]
        write(shard / f"{key}.body", body)
        meta = {
            "url": url,
            "status": status,
            "headers": [["Content-Type", content_type]],
            "fetched_at": CAPTURED_AT,
            "sha256": hashlib.sha256(body).hexdigest(),
        }
        write_json(shard / f"{key}.meta.json", meta)

    def build(self):
        if self.out.exists():
            shutil.rmtree(self.out)
        self.out.mkdir(parents=True)
        images = {vid: draw_variant(vid) for vid in VARIANTS}
        for vid, img in images.items():
            write(self.out / "variants" / f"{vid}.png", png_bytes(img))
        write(self.out / "news_domains.txt", self.news_file())
        write_json(self.fx / "fixtures.json", {"captured_at": CAPTURED_AT, "study": "ftc-mini"})
        write(self.out / "study.toml", STUDY_TOML)

        hits = self.engines(images)
        accepted = [h for h in hits if h["accepted"]]
        holders: dict[str, set[str]] = defaultdict(set)
        for h in accepted:
            holders[h["key"]].add(h["variant"])
        raw = {}
        for h in hits:
            if h["accepted"] and h["page_url"] != PAGES[h["key"]]:
                raw.setdefault(h["key"], h["page_url"])
        posts = self.social(sorted(holders), raw)
        mementos = self.archives(sorted(holders))
        verified = self.web(holders, images)
        self.truth(hits, holders, posts, mementos, verified)

    def news_file(self) -> str:
        lines = ["# News outlets (registrable domains), one per line", ""]
        for d in NEWS_DOMAINS:
            lines.append(d.upper() if d == "npr.org" else d)
        lines.append("https://www.theatlantic.com/")  # URL spellings are reduced to the domain
        return "\n".join(lines) + "\n"

    # engines ---------------------------------------------------------

    def engines(self, images):
        rng = random.Random(7)
        hits = []
        seen = set()
        for vid in VARIANTS:
            for engine in ENGINES:
                entries = RESULTS[(vid, engine)]
                base = self.fx / "engines" / engine / vid
                rendered = []
                for idx, (key, spelling, mode) in enumerate(entries):
                    url = page_url_for(key, spelling)
                    turl = None if mode == "-" else thumb_url(engine, vid, idx, key)
                    if mode in ("m", "c"):
                        width = rng.choice([120, 160, 200, 236])
                        data = thumbnail(images[vid], width, 0.88 if mode == "c" else 1.0, rng.choice([70, 80, 90]))
                    elif mode == "n":
                        data = noise_image(rng)
                    elif mode.startswith("o:"):
                        data = thumbnail(images[mode[2:]], 180)
                    else:
                        data = None
                    if data is not None:
                        write(base / "thumbs" / f"{h16(turl)}.jpg", data)
                    title = key.replace("-", " ").title()
                    rendered.append((url, turl, title))
                    dedupe_key = (engine, vid, PAGES[key])
                    if dedupe_key in seen:
                        continue
                    seen.add(dedupe_key)
                    matched = {"m": True, "c": True, "n": False, "x": None, "-": None}.get(mode, False)
                    hits.append(
                        {"variant": vid, "engine": engine, "key": key, "page_url": url, "matched": matched,
                         "accepted": matched is not False}
                    )
                size = PAGE_SIZE[engine]
                chunks = [rendered[i : i + size] for i in range(0, len(rendered), size)] or [[]]
                for n, chunk in enumerate(chunks, start=1):
                    write(base / f"page-{n}.html", RENDER[engine](chunk, n, n == len(chunks)))
        return hits

    # social ----------------------------------------------------------

    def social(self, keys, raw):
        rng = random.Random(11)
        tweet_id = 1_230_000_000_000_000_000
        posts = []  # dicts with platform, id, key, posted_at, kind, retweet
        for key in keys:
            owner = owner_of(key)
            url = PAGES[key]
            # twitter
            n = {"harris": 9, "economist": 6, "lancet": 7, "vox": 3, "illinois": 2}[owner]
            n += 3 if key in NEWS_KEYS else 0
            tweets = []
            for ym in pick_months(rng, PROFILES[owner], n):
                tweet_id += rng.randrange(10**12, 10**13)
                tweets.append(self._tweet(rng, str(tweet_id), random_time(rng, ym)))
            if key in ("wiki", "econ-blog", "forum-ftc"):
                # pages that predate the study window
                for ym in ("2019-11", "2020-01"):
                    tweet_id += 1
                    tweets.append(self._tweet(rng, str(tweet_id), random_time(rng, ym).replace(day=1)))
            if key == "nyt-curve":
                tweet_id += 1
                tweets.append(self._tweet(rng, str(tweet_id), BOUND))
                tweet_id += 1
                tweets.append(self._tweet(rng, str(tweet_id), BOUND - dt.timedelta(seconds=1)))
            if key in ("nbc-ftc", "wiki"):
                tweet_id += 1
                tweets.append(self._tweet(rng, str(tweet_id), random_time(rng, "2020-03"), retweet=True))
            tweets.sort(key=lambda t: t["created_at"], reverse=True)
            self._write_tweets(url, tweets)
            extra = []
            if key in raw:
                tweet_id += 1
                extra = [tweets[0]] if tweets else []
                extra.append(self._tweet(rng, str(tweet_id), random_time(rng, "2020-04")))
                self._write_tweets(raw[key], extra)
            for t in {t["id"]: t for t in tweets + extra}.values():
                if not t["_retweet"]:
                    posts.append({"platform": "twitter", "id": t["id"], "key": key, "at": t["_at"]})

            # reddit: the archive only covers recent months
            m = rng.randrange(0, 4) + (2 if owner == "lancet" else 0)
            children = []
            for j in range(m):
                t = REDDIT_START + dt.timedelta(days=rng.randrange(0, 75), seconds=rng.randrange(86400))
                kind = "t1" if j % 3 == 2 else "t3"
                pid = f"{rng.randrange(36**6):06x}"
                children.append(
                    {"kind": kind, "data": {"id": pid, "name": f"{kind}_{pid}", "author": f"user{rng.randrange(999)}",
                                            "created_utc": float(int(t.timestamp())), "score": rng.randrange(1, 500),
                                            "subreddit": "COVID19", "url": url}}
                )
            children.sort(key=lambda c: -c["data"]["created_utc"])
            self._write_reddit(url, children)
            for c in children:
                posts.append({"platform": "reddit", "id": c["data"]["name"], "key": key,
                              "at": dt.datetime.fromtimestamp(c["data"]["created_utc"], dt.timezone.utc)})
            if key in raw:
                self._write_reddit(raw[key], children[:1])
        return posts

    def _tweet(self, rng, tid, at, retweet=False):
        t = {
            "id": tid,
            "author_id": str(rng.randrange(10**8, 10**9)),
            "created_at": at.strftime("%Y-%m-%dT%H:%M:%S.000Z"),
            "text": "flatten the curve",
            "public_metrics": {"retweet_count": rng.randrange(50), "reply_count": rng.randrange(10),
                               "like_count": rng.randrange(300), "quote_count": 0},
            "_at": at,
            "_retweet": retweet,
        }
        if retweet:
            t["referenced_tweets"] = [{"type": "retweeted", "id": "1"}]
        elif rng.random() < 0.2:
            t["referenced_tweets"] = [{"type": "replied_to", "id": "2"}]
        return t

    def _write_tweets(self, query, tweets):
        pages = [tweets[i : i + 5] for i in range(0, len(tweets), 5)] or [[]]
        base = self.fx / "social" / "twitter" / h16(query)
        for n, chunk in enumerate(pages, start=1):
            doc = {"meta": {"result_count": len(chunk)}}
            if chunk:
                doc["data"] = [{k: v for k, v in t.items() if not k.startswith("_")} for t in chunk]
                doc["meta"]["newest_id"], doc["meta"]["oldest_id"] = chunk[0]["id"], chunk[-1]["id"]
            if n < len(pages):
                doc["meta"]["next_token"] = f"b26v89c19zqg8o3f{n:04d}"
            write_json(base / f"page-{n}.json", doc)

    def _write_reddit(self, query, children):
        pages = [children[i : i + 5] for i in range(0, len(children), 5)] or [[]]
        base = self.fx / "social" / "reddit" / h16(query)
        for n, chunk in enumerate(pages, start=1):
            after = chunk[-1]["data"]["name"] if n < len(pages) else None
            doc = {"kind": "Listing", "data": {"after": after, "dist": len(chunk), "children": chunk, "before": None}}
            write_json(base / f"page-{n}.json", doc)

    # archives --------------------------------------------------------

    def archives(self, keys):
        rng = random.Random(23)
        records = []  # (key, archive, uri_m, datetime)
        for key in keys:
            url = PAGES[key]
            owner = owner_of(key)
            digest = h16(url)
            n_ia = {"harris": 10, "economist": 6, "lancet": 6, "vox": 4, "illinois": 2}[owner]
            n_ia += 4 if key in NEWS_KEYS and owner == "harris" else 0
            ia = [random_time(rng, ym) for ym in pick_months(rng, ARCHIVE_PROFILES[owner], n_ia)]
            if key in ("wiki", "econ-blog", "harvard-blog"):
                ia += [random_time(rng, "2019-06"), random_time(rng, "2019-12")]
            if key == "wapo-sim":
                ia.append(BOUND)
            ia = sorted(set(ia))
            ia_links = [(f"https://web.archive.example/web/{t:%Y%m%d%H%M%S}/{url}", t) for t in ia]
            bodies = {"ia": ia_links}
            # arquivo re-lists some IA mementos (same URI-M) plus its own captures
            shared = ia_links[::3]
            own = [random_time(rng, ym) for ym in pick_months(rng, ARCHIVE_PROFILES[owner], max(1, n_ia // 4))]
            bodies["arquivo"] = shared + [(f"https://arquivo.example.pt/wayback/{t:%Y%m%d%H%M%S}/{url}", t) for t in sorted(own)]
            if rng.random() < 0.6 or key in NEWS_KEYS:
                uk = [random_time(rng, ym) for ym in pick_months(rng, ARCHIVE_PROFILES[owner], max(1, n_ia // 3))]
                bodies["ukwa"] = [(f"https://www.webarchive.example.uk/wayback/archive/{t:%Y%m%d%H%M%S}mp_/{url}", t)
                                  for t in sorted(uk)]
            else:
                bodies["ukwa"] = None
            for i, archive in enumerate(ARCHIVES):
                path = self.fx / "archives" / archive / f"{digest}.link"
                links = bodies[archive]
                if links is None:
                    write_json(path.with_name(path.name + ".meta.json"), {"status": 404, "headers": [["Content-Type", "text/html"]]})
                    continue
                write(path, self._timemap(archive, url, links, rng, malformed=(i + len(key)) % 4 == 0))
                for uri_m, t in links:
                    records.append((key, archive, uri_m, t))
        return records

    def _timemap(self, archive, url, links, rng, malformed):
        tm = ARCHIVES[archive].replace("{uri_r}", url)
        head = [f'<{url}>; rel="original"', f'<{tm}>; rel="self"; type="application/link-format"']
        if archive == "ia":
            head.append(f'<https://web.archive.example/web/{url}>; rel="timegate"')
        lines = []
        for i, (uri_m, t) in enumerate(links):
            if len(links) > 1 and i == 0:
                rel = "first memento"
            elif len(links) > 1 and i == len(links) - 1:
                rel = "last memento"
            else:
                rel = "memento"
            if archive == "arquivo":
                lines.append(f'<{uri_m}>; datetime="{http_date(t)}"; rel="{rel}"')
            else:
                lines.append(f'<{uri_m}>; rel="{rel}"; datetime="{http_date(t)}"')
        if malformed:
            lines.insert(len(lines) // 2, f'<{tm.split("/timemap")[0]}/20200230000000/{url}>; rel="memento"; datetime="Sun, 30 Feb 2020 00:00:00 GMT"')
        if archive == "ukwa":
            body = head + lines
        else:
            body = head[:1] + lines + head[1:]
        return ",\n".join(body) + "\n"

    # verification pages ----------------------------------------------

    def web(self, holders, images):
        rng = random.Random(31)
        cdn_urls = {}
        for vid, img in images.items():
            cdn_urls[vid] = f"{CDN}/ftc/{vid}-chart.png"
            self.store(cdn_urls[vid], png_bytes(img), content_type="image/png")
        logo = f"{CDN}/assets/logo.png"
        self.store(logo, logo_png(), content_type="image/png")
        broken = f"{CDN}/ftc/removed.png"
        self.store(broken, b"<html>not found</html>", status=404)
        verified = {}
        for key in sorted(holders):
            url = PAGES[key]
            host = url.split("/")[2]
            parts = [f'<img src="{logo}" alt="logo">']
            og = None
            for j, vid in enumerate(sorted(holders[key])):
                style = rng.randrange(5)
                ok = True
                if key in ("lat-ftc", "vox-mirror") or (key == "guardian-ftc" and vid == "lancet"):
                    # the chart was taken down: the image URL now 404s
                    parts.append(f'<img src="{broken}" alt="chart">')
                    ok = False
                elif key == "phish-nyt":
                    parts.append("<p>This article is no longer available.</p>")
                    ok = False
                elif style == 0:
                    local = f"https://{host}/media/{vid}-ftc.jpg"
                    self.store(local, thumbnail(images[vid], 360, 1.0, 85), content_type="image/jpeg")
                    parts.append(f'<img src="/media/{vid}-ftc.jpg" alt="flatten the curve">')
                elif style == 1:
                    parts.append(
                        f'<img src="data:image/gif;base64,R0lGODlhAQABAAAAACw=" '
                        f'srcset="{cdn_urls[vid]} 2x, {CDN}/ftc/{vid}-small.png 1x" alt="chart">'
                    )
                    self.store(f"{CDN}/ftc/{vid}-small.png", b"", status=404)
                elif style == 2:
                    parts.append(f'<picture><source srcset="{cdn_urls[vid]} 480w"><img alt="chart"></picture>')
                elif style == 3 and og is None:
                    og = cdn_urls[vid]
                else:
                    parts.append(f'<figure><img src="{cdn_urls[vid]}" alt="chart"></figure>')
                verified[(vid, key)] = ok
            status = 200
            if key == "politico-ftc":
                status = 410
                for vid in holders[key]:
                    verified[(vid, key)] = False
            head = f'<meta property="og:image" content="{og}">' if og else ""
            doc = (
                f"<!DOCTYPE html><html><head><title>{esc(key)}</title>{head}</head><body>"
                f"<article><h1>Flatten the curve</h1>{''.join(parts)}<p>Text.</p></article></body></html>\n"
            )
            self.store(url, doc.encode(), status=status)
        return verified

    # truth -----------------------------------------------------------

    def truth(self, hits, holders, posts, mementos, verified):
        unique = Counter((h["variant"], h["engine"]) for h in hits)
        matched = Counter((h["variant"], h["engine"]) for h in hits if h["matched"] is True)
        news = Counter((h["variant"], h["engine"]) for h in hits if h["accepted"] and h["key"] in NEWS_KEYS)
        news_distinct = {vid: len({k for k, vs in holders.items() if vid in vs and k in NEWS_KEYS}) for vid in VARIANTS}

        series: dict = defaultdict(lambda: defaultdict(Counter))
        for p in posts:
            if p["at"] < BOUND:
                continue
            for vid in holders[p["key"]]:
                series[vid][p["platform"]][month(p["at"])] += 1
        earliest = {}
        for key, _archive, uri_m, t in mementos:
            if uri_m not in earliest or t < earliest[uri_m][1]:
                earliest[uri_m] = (key, t)
        for key, t in earliest.values():
            if t < BOUND:
                continue
            for vid in holders[key]:
                series[vid]["archive"][month(t)] += 1
        argmax = {}
        for vid in VARIANTS:
            counts = series[vid]["archive"]
            if counts:
                best = max(counts.values())
                argmax[vid] = min(m for m, c in counts.items() if c == best)
        assert argmax["harris"] == "2020-03", argmax
        per_engine_max = {e: max(VARIANTS, key=lambda v: unique[(v, e)]) for e in ENGINES}
        assert all(v == "harris" for v in per_engine_max.values()), per_engine_max
        assert news_distinct["harris"] > 10

        truth = {
            "unique_pages": {f"{v}/{e}": unique[(v, e)] for v in VARIANTS for e in ENGINES if unique[(v, e)]},
            "matched_pages": {f"{v}/{e}": matched[(v, e)] for v in VARIANTS for e in ENGINES if unique[(v, e)]},
            "news_pages": {f"{v}/{e}": news[(v, e)] for v in VARIANTS for e in ENGINES if unique[(v, e)]},
            "news_pages_distinct": news_distinct,
            "accepted_urls": len(holders),
            "series": {
                v: {ch: dict(sorted(c.items())) for ch, c in sorted(series[v].items()) if c} for v in VARIANTS
            },
            "archive_argmax": argmax,
            "verified": {v: sum(1 for (vid, _k), ok in verified.items() if vid == v and ok) for v in VARIANTS},
        }
        write_json(self.out / "truth.json", truth)


STUDY_TOML = """\
# Miniature replay-only study: five synthetic epidemic-curve chart
# variants traced through authored engine, social and archive fixtures.
name = "ftc-mini"
date_lower_bound = 2020-01-30
match_threshold = 10
max_pages = 10
engines = ["bing", "google", "baidu"]
platforms = ["twitter", "reddit"]
news_domain_list = "news_domains.txt"
fixtures = "fixtures"
author_salt = "ftc-mini-salt"
granularity = "month"

[[variants]]
id = "economist"
name = "Economist-style chart"
image = "variants/economist.png"
source_attribution = "synthetic; red/blue filled curves, newspaper layout"
seed_note = "early February 2020 spread"

[[variants]]
id = "harris"
name = "Harris-style chart"
image = "variants/harris.png"
source_attribution = "synthetic; filled curves with a dashed capacity line"
seed_note = "most widely shared variant"

[[variants]]
id = "lancet"
name = "Lancet-style chart"
image = "variants/lancet.png"
source_attribution = "synthetic; dark background, two waves"

[[variants]]
id = "vox"
name = "Vox-style chart"
image = "variants/vox.png"
source_attribution = "synthetic; yellow background, shifted peak"

[[variants]]
id = "illinois"
name = "Illinois-style chart"
image = "variants/illinois.png"
source_attribution = "synthetic; side panel with text bars"

[[archives]]
id = "ia"
timemap = "https://web.archive.example/web/timemap/link/{uri_r}"

[[archives]]
id = "arquivo"
timemap = "https://arquivo.example.pt/wayback/timemap/link/{uri_r}"

[[archives]]
id = "ukwa"
timemap = "https://www.webarchive.example.uk/wayback/archive/timemap/link/{uri_r}"
"""


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "studies" / "ftc-mini"))
    args = parser.parse_args(argv)
    Builder(Path(args.out)).build()
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
