#!/usr/bin/env python3
"""Regenerate the synthetic fixtures under fixtures/ and tests/data/tiff/.

Everything here is deterministic (fixed seeds). The TIFF writer below is
written from the TIFF 6.0 / GeoTIFF layouts directly and shares no code
with the C++ codec, so the decoder tests compare against an independent
encoder.

The transcribed tables (fixtures/table2.csv, fixtures/table3.csv) are not
produced by this script.
"""

import csv
import json
import math
import struct
import sys
import zlib
from pathlib import Path

import numpy as np
from scipy import ndimage

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"
TIFF_DIR = ROOT / "tests" / "data" / "tiff"

MODIS_RADIUS = 6371007.181
MODIS_PIXEL = 231.65635826395825

# ---------------------------------------------------------------- TIFF ----

SHORT, LONG, ASCII, DOUBLE = 3, 4, 2, 12
TYPE_SIZE = {SHORT: 2, LONG: 4, ASCII: 1, DOUBLE: 8}
TYPE_CODE = {SHORT: "H", LONG: "I", DOUBLE: "d"}

DTYPES = {
    "int16": (np.int16, 16, 2),
    "uint16": (np.uint16, 16, 1),
    "float32": (np.float32, 32, 3),
}


def write_tiff(path, data, sample="int16", big_endian=False, layout="strips", compression=8,
               rows_per_strip=2, tile=16, geo=None, nodata=None, extra_tags=None,
               samples_per_pixel=1):
    """Writes a single-IFD TIFF. `data` is (rows, cols) or (rows, cols, spp)."""
    e = ">" if big_endian else "<"
    np_type, bits, fmt = DTYPES[sample]
    arr = np.asarray(data).astype(np_type)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    rows, cols, spp = arr.shape
    assert spp == samples_per_pixel
    arr = arr.astype(arr.dtype.newbyteorder(e))

    blocks = []
    if layout == "strips":
        for r0 in range(0, rows, rows_per_strip):
            blocks.append(arr[r0:r0 + rows_per_strip].tobytes())
    else:
        for r0 in range(0, rows, tile):
            for c0 in range(0, cols, tile):
                t = np.zeros((tile, tile, spp), dtype=arr.dtype)
                part = arr[r0:r0 + tile, c0:c0 + tile]
                t[:part.shape[0], :part.shape[1]] = part
                blocks.append(t.tobytes())
    if compression == 8:
        blocks = [zlib.compress(b, 6) for b in blocks]
    elif compression == 5:
        blocks = [b"\x80" + b for b in blocks]  # not real LZW; only the tag matters

    tags = {
        256: (LONG, [cols]),
        257: (LONG, [rows]),
        258: (SHORT, [bits] * spp),
        259: (SHORT, [compression]),
        262: (SHORT, [1]),
        277: (SHORT, [spp]),
        284: (SHORT, [1]),
        339: (SHORT, [fmt] * spp),
    }
    if layout == "strips":
        tags[278] = (LONG, [rows_per_strip])
        tags[273] = (LONG, [0] * len(blocks))
        tags[279] = (LONG, [len(b) for b in blocks])
    else:
        tags[322] = (LONG, [tile])
        tags[323] = (LONG, [tile])
        tags[324] = (LONG, [0] * len(blocks))
        tags[325] = (LONG, [len(b) for b in blocks])
    if geo:
        if "scale" in geo:
            tags[33550] = (DOUBLE, [geo["scale"][0], geo["scale"][1], 0.0])
        if "tiepoint" in geo:
            tags[33922] = (DOUBLE, [0.0, 0.0, 0.0, geo["tiepoint"][0], geo["tiepoint"][1], 0.0])
        if "transformation" in geo:
            tags[34264] = (DOUBLE, list(geo["transformation"]))
        keys = geo.get("keys", [])
        dparams = geo.get("double_params", [])
        directory = [1, 1, 0, len(keys)]
        for k in keys:
            directory += list(k)
        tags[34735] = (SHORT, directory)
        if dparams:
            tags[34736] = (DOUBLE, dparams)
    if nodata is not None:
        tags[42113] = (ASCII, nodata)
    if extra_tags:
        tags.update(extra_tags)

    def encode(typ, values):
        if typ == ASCII:
            return values.encode("ascii") + b"\0"
        return struct.pack(e + TYPE_CODE[typ] * len(values), *values)

    ntags = len(tags)
    ifd_size = 2 + 12 * ntags + 4
    data_at = 8 + ifd_size
    payloads = {}
    # First pass with placeholder offsets to size the out-of-line area.
    ool = bytearray()
    for tag in sorted(tags):
        typ, vals = tags[tag]
        raw = encode(typ, vals)
        if len(raw) > 4:
            payloads[tag] = data_at + len(ool)
            ool += raw
            if len(ool) % 2:
                ool += b"\0"
    block_at = data_at + len(ool)
    offsets = []
    pos = block_at
    for b in blocks:
        offsets.append(pos)
        pos += len(b)
    off_tag = 273 if layout == "strips" else 324
    tags[off_tag] = (LONG, offsets)
    ool = bytearray()
    for tag in sorted(tags):
        typ, vals = tags[tag]
        raw = encode(typ, vals)
        if len(raw) > 4:
            assert payloads[tag] == data_at + len(ool)
            ool += raw
            if len(ool) % 2:
                ool += b"\0"

    out = bytearray()
    out += (b"MM" if big_endian else b"II") + struct.pack(e + "HI", 42, 8)
    out += struct.pack(e + "H", ntags)
    for tag in sorted(tags):
        typ, vals = tags[tag]
        raw = encode(typ, vals)
        count = len(raw) if typ == ASCII else len(vals)
        out += struct.pack(e + "HHI", tag, typ, count)
        if len(raw) > 4:
            out += struct.pack(e + "I", payloads[tag])
        else:
            out += raw + b"\0" * (4 - len(raw))
    out += struct.pack(e + "I", 0)
    out += ool
    assert len(out) == block_at
    for b in blocks:
        out += b
    Path(path).write_bytes(bytes(out))


def sinusoidal_keys():
    # projected, user-defined sinusoidal on a sphere, metres
    keys = [(1024, 0, 1, 1), (1025, 0, 1, 1), (2048, 0, 1, 32767), (2057, 34736, 1, 0),
            (3072, 0, 1, 32767), (3074, 0, 1, 32767), (3075, 0, 1, 24), (3076, 0, 1, 9001)]
    return keys, [MODIS_RADIUS]


def utm35n_keys():
    return [(1024, 0, 1, 1), (1025, 0, 1, 1), (3072, 0, 1, 32635), (3076, 0, 1, 9001)], []


def write_ascii_grid(path, arr, x0, y0_top, cell, nodata):
    rows, cols = arr.shape
    with open(path, "w") as f:
        f.write(f"ncols {cols}\nnrows {rows}\n")
        f.write(f"xllcorner {x0!r}\nyllcorner {y0_top - rows * cell!r}\n")
        f.write(f"cellsize {cell!r}\n")
        if nodata is not None:
            f.write(f"NODATA_value {nodata!r}\n")
        for r in range(rows):
            f.write(" ".join(repr(float(v)) for v in arr[r]) + "\n")


# ---------------------------------------------------- codec fixtures ----

def codec_fixtures():
    TIFF_DIR.mkdir(parents=True, exist_ok=True)
    rows, cols = 5, 7
    base = np.arange(rows * cols, dtype=np.float64).reshape(rows, cols)
    values = {
        "int16": (base - 10.0, "-9999"),
        "uint16": (base + 60000.0, "65535"),
        "float32": (base - 10.25, "-9999"),
    }
    geo = {"scale": (250.0, 250.0), "tiepoint": (1.0e6, 2.0e6), "keys": utm35n_keys()[0]}
    for sample, (arr, nod) in values.items():
        for layout in ("strips", "tiles"):
            for be in (False, True):
                for comp, cname in ((1, "none"), (8, "deflate")):
                    name = f"grid_{sample}_{layout}_{'be' if be else 'le'}_{cname}.tif"
                    write_tiff(TIFF_DIR / name, arr, sample=sample, big_endian=be, layout=layout,
                               compression=comp, geo=geo, nodata=nod)
        write_ascii_grid(TIFF_DIR / f"expected_{sample}.asc", arr, 1.0e6, 2.0e6, 250.0, float(nod))

    arr = values["int16"][0]
    write_tiff(TIFF_DIR / "bad_multiband.tif", np.stack([arr] * 3, axis=2), samples_per_pixel=3, geo=geo)
    write_tiff(TIFF_DIR / "bad_lzw.tif", arr, compression=5, geo=geo)
    write_tiff(TIFF_DIR / "bad_predictor.tif", arr, geo=geo, extra_tags={317: (SHORT, [2])})
    rot = {"transformation": (250.0, 10.0, 0.0, 1.0e6, 10.0, -250.0, 0.0, 2.0e6,
                              0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
           "keys": utm35n_keys()[0]}
    write_tiff(TIFF_DIR / "bad_rotated.tif", arr, geo=rot)
    good = (TIFF_DIR / "grid_int16_strips_le_deflate.tif").read_bytes()
    (TIFF_DIR / "bad_truncated.tif").write_bytes(good[: len(good) - 20])
    (TIFF_DIR / "bad_bigtiff.tif").write_bytes(b"II+\0\x08\0\0\0" + b"\0" * 16)


# ------------------------------------------------------------ zones ----

CITY_LATLON = {
    "Alba Iulia": (46.067, 23.570), "Alexandria": (43.969, 25.332), "Arad": (46.176, 21.319),
    "Bacău": (46.567, 26.914), "Baia Mare": (47.659, 23.568), "Bistrița": (47.133, 24.500),
    "Botoșani": (47.748, 26.666), "Brăila": (45.269, 27.957), "Brașov": (45.642, 25.589),
    "București": (44.432, 26.104), "Buzău": (45.150, 26.833), "Călărași": (44.200, 27.331),
    "Cluj-Napoca": (46.770, 23.590), "Constanța": (44.173, 28.638), "Craiova": (44.319, 23.796),
    "Deva": (45.883, 22.901), "Drobeta-Turnu Severin": (44.631, 22.656), "Focșani": (45.697, 27.186),
    "Galați": (45.435, 28.007), "Giurgiu": (43.904, 25.969), "Iași": (47.158, 27.601),
    "Miercurea Ciuc": (46.358, 25.802), "Oradea": (47.072, 21.921), "Piatra-Neamț": (46.927, 26.371),
    "Pitești": (44.857, 24.869), "Ploiești": (44.946, 26.036), "Râmnicu Vâlcea": (45.100, 24.369),
    "Reșița": (45.301, 21.889), "Satu Mare": (47.792, 22.885), "Sfântu Gheorghe": (45.862, 25.788),
    "Sibiu": (45.793, 24.152), "Slatina": (44.430, 24.364), "Slobozia": (44.564, 27.363),
    "Suceava": (47.651, 26.256), "Târgoviște": (44.925, 25.457), "Târgu Jiu": (45.035, 23.275),
    "Târgu Mures": (46.542, 24.557), "Timisoara": (45.748, 21.208), "Tulcea": (45.172, 28.792),
    "Vaslui": (46.640, 27.729), "Zalău": (47.193, 23.057),
}

FOLDS = str.maketrans({"ă": "a", "â": "a", "î": "i", "ș": "s", "ş": "s", "ț": "t", "ţ": "t",
                       "Ă": "a", "Â": "a", "Î": "i", "Ș": "s", "Ş": "s", "Ț": "t", "Ţ": "t"})


def slug(name):
    return name.translate(FOLDS).lower().replace(" ", "-").replace("_", "-")


def sinusoidal(lon, lat):
    lam, phi = math.radians(lon), math.radians(lat)
    return MODIS_RADIUS * lam * math.cos(phi), MODIS_RADIUS * phi


def lobed_ring(cx, cy, area_m2, rng, n=24):
    """Star-shaped ring with wobbly radius, scaled to exactly `area_m2`."""
    angles = np.linspace(0.0, 2 * math.pi, n, endpoint=False) + rng.uniform(0, 2 * math.pi)
    radii = 1.0 + 0.18 * np.sin(3 * angles + rng.uniform(0, 6)) + rng.uniform(-0.06, 0.06, n)
    xs, ys = radii * np.cos(angles), radii * np.sin(angles)
    shoelace = 0.5 * abs(np.dot(xs, np.roll(ys, -1)) - np.dot(ys, np.roll(xs, -1)))
    k = math.sqrt(area_m2 / shoelace)
    pts = [[round(cx + k * x, 3), round(cy + k * y, 3)] for x, y in zip(xs, ys)]
    return pts + [pts[0]]


def zone_fixtures():
    rng = np.random.default_rng(20220701)
    with open(FIX / "table3.csv", encoding="utf-8") as f:
        table3 = list(csv.DictReader(f))
    with open(FIX / "table2.csv", encoding="utf-8") as f:
        table2 = [r for r in csv.DictReader(f) if r["name"] != "Mean"]
    features = []
    for row in table3:
        name = row["name"]
        lat, lon = CITY_LATLON[name]
        cx, cy = sinusoidal(lon, lat)
        ring = lobed_ring(cx, cy, float(row["total_km2"]) * 1e6, rng)
        features.append({"type": "Feature", "id": slug(name),
                         "properties": {"id": slug(name), "name": name},
                         "geometry": {"type": "Polygon", "coordinates": [ring]}})
    (FIX / "zones_ro.geojson").write_text(
        json.dumps({"type": "FeatureCollection", "features": features}, ensure_ascii=False, indent=1) + "\n",
        encoding="utf-8")

    records = []
    for row in table2:
        for sensor, col in (("MODIS", "modis"), ("SENTINEL2", "sentinel2")):
            records.append({"zone_id": slug(row["name"]), "sensor": sensor, "threshold": float(row[col])})
    records.sort(key=lambda r: (r["zone_id"], r["sensor"]))
    (FIX / "thresholds_table2.json").write_text(json.dumps({"records": records}, indent=2) + "\n")
    return {slug(r["name"]): r for r in table3}


# ------------------------------------------------- Bucharest windows ----

def mixture_field(shape, rng, components, sigma):
    """Spatially correlated field whose marginal follows a Gaussian mixture."""
    field = ndimage.gaussian_filter(rng.standard_normal(shape), sigma)
    ranks = field.ravel().argsort().argsort()
    n = ranks.size
    draws = []
    for weight, mu, sd in components:
        draws.append(rng.normal(mu, sd, int(round(weight * n))))
    pool = np.sort(np.concatenate(draws))
    idx = np.linspace(0, pool.size - 1, n).round().astype(int)
    return np.clip(pool[idx][ranks].reshape(shape), -0.2, 0.95)


def bucharest_fixtures():
    rng = np.random.default_rng(4426)
    lat, lon = CITY_LATLON["București"]
    cx, cy = sinusoidal(lon, lat)
    n = 130
    col0 = math.floor(cx / MODIS_PIXEL) - n // 2
    row_top = math.floor(cy / MODIS_PIXEL) + n // 2
    x0, y0 = col0 * MODIS_PIXEL, row_top * MODIS_PIXEL
    ndvi = mixture_field((n, n), rng, [(0.62, 0.50, 0.05), (0.25, 0.30, 0.08), (0.13, 0.72, 0.06)], 2.0)
    raw = np.round(ndvi * 10000).astype(np.int64)
    holes = rng.random((n, n)) < 0.004
    raw[holes] = -3000
    keys, dparams = sinusoidal_keys()
    write_tiff(FIX / "bucharest_modis_ndvi.tif", raw, sample="int16", layout="tiles", tile=64,
               compression=8, geo={"scale": (MODIS_PIXEL, MODIS_PIXEL), "tiepoint": (x0, y0),
                                   "keys": keys, "double_params": dparams},
               nodata="-3000")

    # 3 km x 3 km Sentinel-2 window (10 m) in UTM 35N near the city centre.
    m = 300
    e0, n0 = 426000.0, 4921500.0
    s2 = mixture_field((m, m), rng, [(0.55, 0.36, 0.05), (0.30, 0.15, 0.07), (0.15, 0.62, 0.08)], 3.0)
    red = rng.uniform(0.04, 0.14, (m, m))
    nir = red * (1 + s2) / (1 - s2)
    red_dn = np.clip(np.round(red * 10000), 1, 65534).astype(np.int64)
    nir_dn = np.clip(np.round(nir * 10000), 1, 65534).astype(np.int64)
    gaps = rng.random((m, m)) < 0.003
    red_dn[gaps] = 0
    nir_dn[gaps] = 0
    keys, _ = utm35n_keys()
    geo = {"scale": (10.0, 10.0), "tiepoint": (e0, n0), "keys": keys}
    write_tiff(FIX / "bucharest_s2_red.tif", red_dn, sample="uint16", layout="strips", rows_per_strip=16,
               geo=geo, nodata="0")
    write_tiff(FIX / "bucharest_s2_nir.tif", nir_dn, sample="uint16", layout="strips", rows_per_strip=16,
               geo=geo, nodata="0")

    ring = lobed_ring(e0 + 1500.0, n0 - 1500.0, 4.0e6, rng, n=16)
    zone = {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"id": "bucuresti-centre", "name": "București (centre window)"},
         "geometry": {"type": "Polygon", "coordinates": [ring]}}]}
    (FIX / "bucharest_s2_zone.geojson").write_text(json.dumps(zone, ensure_ascii=False, indent=1) + "\n",
                                                   encoding="utf-8")


def main():
    FIX.mkdir(exist_ok=True)
    codec_fixtures()
    zone_fixtures()
    bucharest_fixtures()
    print("fixtures written", file=sys.stderr)


if __name__ == "__main__":
    main()
