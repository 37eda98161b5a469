"""Coordinate lookup and great-circle distances for collaboration indicators."""

from __future__ import annotations

import csv
from math import atan2, cos, radians, sin, sqrt
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import Address, Publication

EARTH_RADIUS_KM = 6371.0

Coordinates = tuple[float, float]  # (latitude degrees, longitude degrees)


def geodesic_km(a: Coordinates, b: Coordinates) -> float:
    """Haversine great-circle distance in km on a sphere of radius 6371.0 km."""
    lat1, lon1 = radians(a[0]), radians(a[1])
    lat2, lon2 = radians(b[0]), radians(b[1])
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = sin(dlat / 2.0) ** 2 + cos(lat1) * cos(lat2) * sin(dlon / 2.0) ** 2
    return EARTH_RADIUS_KM * 2.0 * atan2(sqrt(h), sqrt(1.0 - h))


def _validate(key: str, lat: float, lon: float) -> Coordinates:
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"latitude {lat} outside [-90, 90] for key {key!r}")
    if not -180.0 <= lon <= 180.0:
        raise ValueError(f"longitude {lon} outside [-180, 180] for key {key!r}")
    return lat, lon


class GeoTable:
    """Address-key -> coordinates lookup.

    Keys are the normalized organization tokens plus city tokens of an
    address, space-joined (``Address.geo_key``).  Lookup falls back to inline
    coordinates carried on the address record; missing is allowed and such
    addresses are simply ignored by distance computations.
    """

    def __init__(self, entries: Mapping[str, Coordinates] | Iterable[tuple[str, Coordinates]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        self.entries: dict[str, Coordinates] = {
            key: _validate(key, lat, lon) for key, (lat, lon) in items
        }

    def __len__(self) -> int:
        return len(self.entries)

    def locate(self, addr: Address) -> Coordinates | None:
        coords = self.entries.get(addr.geo_key)
        if coords is not None:
            return coords
        return addr.geo


def load_geo_table(path: str | Path) -> GeoTable:
    """Load address_key,lat,lon rows (header required)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return GeoTable()
        if [h.strip() for h in header[:3]] != ["address_key", "lat", "lon"]:
            raise ValueError(
                f"geo file must start with header address_key,lat,lon, got {header!r}"
            )
        entries: list[tuple[str, Coordinates]] = []
        for row in reader:
            if not row:
                continue
            entries.append((row[0], (float(row[1]), float(row[2]))))
    return GeoTable(entries)


def write_geo_table(table: GeoTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["address_key", "lat", "lon"])
        for key in sorted(table.entries):
            lat, lon = table.entries[key]
            writer.writerow([key, repr(lat), repr(lon)])


def collaboration_distance_km(pub: Publication, geo: GeoTable) -> float:
    """Largest pairwise distance between the publication's located addresses.

    Addresses without coordinates are ignored; with fewer than two located
    points (including the single-address case) the distance is zero.
    """
    points = {coords for addr in pub.addresses if (coords := geo.locate(addr)) is not None}
    if len(points) < 2:
        return 0.0
    coords = list(points)
    best = 0.0
    for i, a in enumerate(coords):
        for b in coords[i + 1 :]:
            d = geodesic_km(a, b)
            if d > best:
                best = d
    return best
