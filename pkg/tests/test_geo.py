"""Great-circle distances and per-publication collaboration distance."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bibliorank.corpus import make_address
from bibliorank.geo import (
    EARTH_RADIUS_KM,
    GeoTable,
    collaboration_distance_km,
    geodesic_km,
    load_geo_table,
    write_geo_table,
)

from conftest import pub

# independent haversine check values, computed with the asin formulation
PARIS = (48.8566, 2.3522)
LONDON = (51.5074, -0.1278)
PARIS_LONDON_KM = 343.55606034104153
ANTIPODAL_KM = math.pi * EARTH_RADIUS_KM  # 20015.086796020572


def oracle_haversine(a, b):
    lat1, lon1, lat2, lon2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    s = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(s))


coord = st.tuples(
    st.floats(min_value=-90, max_value=90),
    st.floats(min_value=-180, max_value=180),
)


class TestGeodesic:
    def test_identity(self):
        assert geodesic_km(PARIS, PARIS) == 0.0

    def test_antipodal(self):
        assert geodesic_km((0.0, 0.0), (0.0, 180.0)) == pytest.approx(
            ANTIPODAL_KM, abs=1e-6
        )
        assert geodesic_km((90.0, 0.0), (-90.0, 0.0)) == pytest.approx(
            ANTIPODAL_KM, abs=1e-6
        )

    def test_paris_london_matches_oracle(self):
        value = geodesic_km(PARIS, LONDON)
        assert value == pytest.approx(PARIS_LONDON_KM, rel=1e-6)
        assert value == pytest.approx(oracle_haversine(PARIS, LONDON), rel=1e-9)

    @settings(max_examples=300, deadline=None)
    @given(coord, coord)
    def test_symmetric_bounded_nonnegative(self, a, b):
        d_ab = geodesic_km(a, b)
        d_ba = geodesic_km(b, a)
        assert d_ab == d_ba
        assert 0.0 <= d_ab <= ANTIPODAL_KM + 1e-9

    @settings(max_examples=200, deadline=None)
    @given(coord, coord)
    def test_matches_oracle_everywhere(self, a, b):
        assert geodesic_km(a, b) == pytest.approx(oracle_haversine(a, b), abs=1e-6)

    @settings(max_examples=100, deadline=None)
    @given(coord)
    def test_zero_iff_identical(self, a):
        assert geodesic_km(a, a) == 0.0


class TestGeoTable:
    def test_lookup_by_address_key(self):
        addr = make_address("University Alpha", "Alphaville")
        table = GeoTable({addr.geo_key: (10.0, 20.0)})
        assert table.locate(addr) == (10.0, 20.0)

    def test_missing_returns_none(self):
        table = GeoTable()
        assert table.locate(make_address("Nowhere U")) is None

    def test_inline_coordinates_as_fallback(self):
        addr = make_address("Somewhere", geo=(1.0, 2.0))
        table = GeoTable()
        assert table.locate(addr) == (1.0, 2.0)

    def test_table_takes_precedence_over_inline(self):
        addr = make_address("Somewhere", geo=(1.0, 2.0))
        table = GeoTable({addr.geo_key: (3.0, 4.0)})
        assert table.locate(addr) == (3.0, 4.0)

    def test_invalid_coordinates_rejected(self):
        with pytest.raises(ValueError):
            GeoTable({"k": (95.0, 0.0)})
        with pytest.raises(ValueError):
            GeoTable({"k": (0.0, 200.0)})

    def test_round_trip(self, tmp_path):
        table = GeoTable({"a key": (12.5, -33.25), "b key": (-5.0, 170.125)})
        path = tmp_path / "geo.csv"
        write_geo_table(table, path)
        again = load_geo_table(path)
        assert again.entries == table.entries

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "geo.csv"
        path.write_text("key,latitude,longitude\nx,0,0\n")
        with pytest.raises(ValueError):
            load_geo_table(path)


class TestCollaborationDistance:
    def _table(self, mapping):
        entries = {}
        for raw, coords in mapping.items():
            entries[make_address(raw).geo_key] = coords
        return GeoTable(entries)

    def test_single_address_is_zero(self):
        table = self._table({"University Alpha": (0.0, 0.0)})
        p = pub("a", addrs=("University Alpha",))
        assert collaboration_distance_km(p, table) == 0.0

    def test_max_over_pairs(self):
        # two co-located plus one ~1112 km north: max is the far pair
        table = self._table(
            {
                "Org A": (0.0, 0.0),
                "Org B": (0.0, 0.0),
                "Org C": (10.0, 0.0),
            }
        )
        p = pub("a", addrs=("Org A", "Org B", "Org C"))
        expected = max(
            oracle_haversine((0.0, 0.0), (10.0, 0.0)),
            oracle_haversine((0.0, 0.0), (0.0, 0.0)),
        )
        assert collaboration_distance_km(p, table) == pytest.approx(expected)

    def test_unlocated_addresses_ignored(self):
        table = self._table({"Org A": (0.0, 0.0)})
        p = pub("a", addrs=("Org A", "Unknown Org"))
        assert collaboration_distance_km(p, table) == 0.0

    def test_two_located_addresses(self):
        table = self._table({"Org A": PARIS, "Org B": LONDON})
        p = pub("a", addrs=("Org A", "Org B"))
        assert collaboration_distance_km(p, table) == pytest.approx(
            PARIS_LONDON_KM, rel=1e-6
        )

    def test_duplicate_points_collapse(self):
        table = self._table({"Org A": PARIS, "Org B": PARIS, "Org C": LONDON})
        p = pub("a", addrs=("Org A", "Org B", "Org C"))
        assert collaboration_distance_km(p, table) == pytest.approx(
            PARIS_LONDON_KM, rel=1e-6
        )

    def test_adding_located_address_never_decreases(self):
        table = self._table(
            {"Org A": (0.0, 0.0), "Org B": (5.0, 5.0), "Org C": (40.0, 40.0)}
        )
        base = pub("a", addrs=("Org A", "Org B"))
        more = pub("a2", addrs=("Org A", "Org B", "Org C"))
        assert collaboration_distance_km(more, table) >= collaboration_distance_km(
            base, table
        )

    def test_no_addresses(self):
        assert collaboration_distance_km(pub("a", addrs=()), GeoTable()) == 0.0
