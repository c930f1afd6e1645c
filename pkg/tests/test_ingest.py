import datetime as dt
import filecmp
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bikevolume.core import GeoPoint, StreetSegment, Window, aggregate_daily_frame
from bikevolume.errors import ConfigError, DataError
from bikevolume.ingest import (
    FILES,
    SCHEMAS,
    AvailabilitySnapshot,
    StreetGraph,
    SyntheticConfig,
    Trip,
    generate_synthetic_city,
    load_bundle,
    map_socio_year,
    read_snapshots,
    read_trips,
    reconstruct_trips,
    route_trip,
    save_bundle,
    schema_text,
    write_snapshots,
    write_trips,
)

from oracles import brute_force_distance, gap_trips, polyline_length, random_graph, random_stream

T0 = dt.datetime(2019, 5, 1, 9, 0)
A, B, C = GeoPoint(52.50, 13.40), GeoPoint(52.51, 13.41), GeoPoint(52.52, 13.42)


def snap(minute, **bikes):
    return AvailabilitySnapshot(T0 + dt.timedelta(minutes=minute), bikes)


def stream_snapshots(present, coords, times):
    out = []
    for i, t in enumerate(times):
        bikes = {f"b{b}": GeoPoint(*coords[b, i]) for b in range(present.shape[0]) if present[b, i]}
        out.append(AvailabilitySnapshot(t, bikes))
    return out


class TestReconstruction:
    def test_never_rented(self):
        assert reconstruct_trips([snap(m, x=A) for m in range(5)]) == []

    def test_single_rental(self):
        snaps = [snap(0, x=A)] + [snap(m) for m in range(1, 15)] + [snap(15, x=B)]
        (trip,) = reconstruct_trips(snaps)
        assert (trip.origin, trip.destination) == (A, B)
        assert trip.duration == 15 * 60

    def test_two_gaps_in_order(self):
        snaps = [snap(0, x=A), snap(1), snap(2, x=B), snap(3, x=B), snap(4), snap(5, x=C)]
        trips = reconstruct_trips(snaps)
        assert [(t.origin, t.destination) for t in trips] == [(A, B), (B, C)]
        assert [t.start.minute for t in trips] == [0, 3]

    def test_absent_at_edges(self):
        snaps = [snap(0), snap(1, x=A), snap(2, x=A), snap(3)]
        assert reconstruct_trips(snaps) == []

    def test_out_of_order(self):
        with pytest.raises(DataError) as exc:
            reconstruct_trips([snap(2, x=A), snap(1, x=A)])
        assert exc.value.code == "out_of_order"

    def test_ndjson_round_trip(self, tmp_path):
        snaps = [snap(0, x=A, y=B), snap(1, y=C)]
        write_snapshots(snaps, tmp_path / "s.ndjson")
        assert read_snapshots(tmp_path / "s.ndjson") == snaps

    def test_duplicate_bike_in_snapshot(self, tmp_path):
        path = tmp_path / "s.ndjson"
        path.write_text('{"ts": "2019-05-01T09:00", "bikes": [{"id": "x", "lat": 52.5, "lon": 13.4},'
                        ' {"id": "x", "lat": 52.5, "lon": 13.4}]}\n')
        with pytest.raises(DataError):
            read_snapshots(path)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_gap_oracle(self, seed):
        present, coords, times = random_stream(np.random.default_rng(seed))
        got = reconstruct_trips(stream_snapshots(present, coords, times))
        want = gap_trips(present, coords, times)
        assert [(t.bike_id, (t.origin.lat, t.origin.lon), (t.destination.lat, t.destination.lon), t.start, t.end)
                for t in got] == want


def graph_from(nodes, edges):
    recs = []
    for k, (u, v, pts, ok) in enumerate(edges):
        recs.append((StreetSegment(f"e{k}", tuple(GeoPoint(*p) for p in pts)), ok, 30.0, 0))
    return StreetGraph.from_segments(recs)


def trip(o, d):
    return Trip("b", o, d, T0, T0 + dt.timedelta(minutes=10))


class TestRouting:
    def test_same_node(self):
        g = graph_from([(52.5, 13.4), (52.51, 13.4)], [(0, 1, [(52.5, 13.4), (52.51, 13.4)], True)])
        t = route_trip(g, trip(GeoPoint(52.5, 13.4), GeoPoint(52.5, 13.4)))
        assert t.routed_distance == 0.0

    def test_same_node_with_snap(self):
        g = graph_from([(52.5, 13.4), (52.51, 13.4)], [(0, 1, [(52.5, 13.4), (52.51, 13.4)], True)])
        o, d = GeoPoint(52.5001, 13.4), GeoPoint(52.4999, 13.4)
        t = route_trip(g, trip(o, d))
        assert t.routed_distance == pytest.approx(2 * 11.12, abs=0.05)

    def test_line_graph(self):
        pts = [(52.50, 13.40), (52.51, 13.40), (52.52, 13.40)]
        g = graph_from(pts, [(0, 1, pts[:2], True), (1, 2, pts[1:], True)])
        t = route_trip(g, trip(GeoPoint(*pts[0]), GeoPoint(*pts[2])))
        assert t.routed_distance == pytest.approx(polyline_length(pts), rel=1e-12)
        assert GeoPoint(*pts[1]) in t.route

    def test_square_with_forbidden_edge(self):
        sq = [(52.50, 13.40), (52.50, 13.41), (52.51, 13.41), (52.51, 13.40)]
        edges = [(0, 1, [sq[0], sq[1]], False), (1, 2, [sq[1], sq[2]], True), (2, 3, [sq[2], sq[3]], True),
                 (3, 0, [sq[3], sq[0]], True)]
        t = route_trip(graph_from(sq, edges), trip(GeoPoint(*sq[0]), GeoPoint(*sq[1])))
        detour = polyline_length([sq[0], sq[3], sq[2], sq[1]])
        assert t.routed_distance == pytest.approx(detour, rel=1e-12)

    def test_disconnected_is_unroutable(self):
        pts = [(52.50, 13.40), (52.51, 13.40), (52.60, 13.50), (52.61, 13.50)]
        g = graph_from(pts, [(0, 1, pts[:2], True), (2, 3, pts[2:], True)])
        t = route_trip(g, trip(GeoPoint(*pts[0]), GeoPoint(*pts[3])))
        assert t.unroutable and t.routed_distance is None and t.is_routed

    def test_route_geometry_matches_distance(self):
        rng = np.random.default_rng(5)
        nodes, edges = random_graph(rng, 7)
        g = graph_from(nodes, edges)
        t = route_trip(g, trip(GeoPoint(52.505, 13.39), GeoPoint(52.525, 13.42)))
        if not t.unroutable:
            pts = [(p.lat, p.lon) for p in t.route]
            assert polyline_length(pts) == pytest.approx(t.routed_distance, rel=1e-9)

    @pytest.mark.parametrize("seed", range(40))
    def test_optimal_against_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        nodes, edges = random_graph(rng, int(rng.integers(2, 9)))
        if not edges:
            return
        o, d = (tuple(rng.uniform([52.50, 13.38], [52.53, 13.43])) for _ in range(2))
        want = brute_force_distance(nodes, edges, o, d)
        got = route_trip(graph_from(nodes, edges), trip(GeoPoint(*o), GeoPoint(*d)))
        if want is None:
            assert got.unroutable
        else:
            assert got.routed_distance == pytest.approx(want, rel=1e-9)

    def test_geojson_round_trip(self, tmp_path, small_city):
        g = small_city[0].street_graph
        g.write(tmp_path / "g.geojson")
        h = StreetGraph.read(tmp_path / "g.geojson")
        assert [e.id for e in h.edges] == [e.id for e in g.edges]
        assert [e.bicycle for e in h.edges] == [e.bicycle for e in g.edges]
        assert [e.maxspeed for e in h.edges] == [e.maxspeed for e in g.edges]

    def test_bad_geojson(self):
        with pytest.raises(DataError):
            StreetGraph.from_geojson({"type": "Feature"})


class TestSocioYear:
    def test_paper_mapping(self):
        assert map_socio_year(2019, {2019, 2020}) == 2019
        assert map_socio_year(2022, {2019, 2020}) == 2020

    def test_latest_not_after(self):
        assert map_socio_year(2021, {2019, 2020}) == 2020

    def test_none_available(self):
        with pytest.raises(ConfigError):
            map_socio_year(2018, {2019, 2020})


def tree_equal(a, b):
    cmp = filecmp.dircmp(a, b)
    files = cmp.common_files
    return not cmp.left_only and not cmp.right_only and all(
        (a / f).read_bytes() == (b / f).read_bytes() for f in files)


class TestSynthetic:
    def test_byte_identical(self, tmp_path, small_city):
        cfg = SyntheticConfig(n_long=6, n_short=2, n_days=24, n_paired=2, grid_lines=6, trips_per_day=15,
                              n_poi=80, n_detectors=6, short_term_dates=4)
        save_bundle(small_city[0], tmp_path / "a")
        save_bundle(generate_synthetic_city(3, cfg)[0], tmp_path / "b")
        assert tree_equal(tmp_path / "a", tmp_path / "b")

    def test_seed_changes_output(self, small_city):
        cfg = SyntheticConfig(n_long=6, n_short=2, n_days=24, n_paired=2, grid_lines=6, trips_per_day=15,
                              n_poi=80, n_detectors=6, short_term_dates=4)
        other = generate_synthetic_city(4, cfg)[0]
        assert not other.counts.equals(small_city[0].counts)

    def test_zero_days(self, tmp_path):
        bundle, truth = generate_synthetic_city(0, SyntheticConfig(n_long=3, n_short=1, n_days=0, n_paired=1,
                                                                   grid_lines=4, n_poi=20, n_detectors=2))
        assert bundle.counts.empty and truth.expected.empty
        assert len(bundle.stations) > 0 and len(bundle.poi) >= 20
        save_bundle(bundle, tmp_path)
        assert load_bundle(tmp_path).counts.empty

    def test_noise_free_counts_equal_rounded_mean(self):
        cfg = SyntheticConfig(n_long=4, n_short=0, n_days=12, n_paired=1, grid_lines=5, noise_sd=0.0,
                              missing_hour_rate=0.0, trips_per_day=5, n_poi=30, n_detectors=2)
        bundle, truth = generate_synthetic_city(1, cfg)
        daily = aggregate_daily_frame(bundle.counts, Window.FULL_DAY)
        daily = daily.merge(bundle.stations[["station_id", "location_id"]], on="station_id")
        per_loc = daily.groupby(["location_id", "date"])["count"].sum().reset_index()
        per_loc["date"] = pd.to_datetime(per_loc["date"])
        merged = per_loc.merge(truth.expected, on=["location_id", "date"])
        assert len(merged) == len(truth.expected) == 4 * 12
        assert (merged["count"] == np.round(merged["expected"]).astype(int)).all()

    def test_needs_three_long_term_stations(self):
        with pytest.raises(ConfigError):
            SyntheticConfig(n_long=2)

    def test_unknown_config_key(self):
        with pytest.raises(ConfigError):
            SyntheticConfig.from_dict({"n_stations": 3})

    def test_invariants(self, city):
        bundle, truth = city
        assert bundle.meta.in_study(pd.to_datetime(bundle.counts["timestamp"])).all()
        st = bundle.strava_segments
        assert (st["trip_count"] % 5 == 0).all() and (st["trip_count"] > 0).all()
        assert set(truth.location_effects) == set(bundle.stations["location_id"])
        assert truth.noise_sd == pytest.approx(0.12)
        kinds = bundle.stations.groupby("location_id")["kind"].nunique()
        assert (kinds == 1).all()

    def test_ground_truth_serialises(self, small_city):
        d = small_city[1].to_dict()
        assert {"intercept", "coefficients", "location_effects", "noise_sd"} <= set(d)


class TestBundleIO:
    def test_round_trip(self, tmp_path, small_city):
        bundle = small_city[0]
        save_bundle(bundle, tmp_path)
        back = load_bundle(tmp_path)
        for source in FILES:
            if source == "trips":
                continue
            pd.testing.assert_frame_equal(getattr(back, source), getattr(bundle, source), check_dtype=False)
        assert back.trips == bundle.trips
        assert back.snapshots == bundle.snapshots
        save_bundle(back, tmp_path / "again")
        assert (tmp_path / "again" / "counts.csv").read_bytes() == (tmp_path / "counts.csv").read_bytes()

    @pytest.fixture
    def saved(self, tmp_path, small_city):
        save_bundle(small_city[0], tmp_path)
        return tmp_path

    def rewrite(self, path, edit):
        lines = path.read_text().splitlines()
        path.write_text("\n".join(edit(lines)) + "\n")

    def test_empty_counts_file(self, saved):
        (saved / "counts.csv").write_text(",".join(SCHEMAS["counts"]) + "\n")
        assert load_bundle(saved).counts.empty

    def test_negative_count_names_row(self, saved):
        def edit(lines):
            sid, ts, _ = lines[5].split(",")
            lines[5] = f"{sid},{ts},-3"
            return lines

        self.rewrite(saved / "counts.csv", edit)
        with pytest.raises(DataError) as exc:
            load_bundle(saved)
        assert exc.value.code == "invalid_value" and exc.value.context["line"] == 6

    def test_schema_mismatch(self, saved):
        self.rewrite(saved / "weather.csv", lambda lines: [lines[0].replace("tavg", "temp")] + lines[1:])
        with pytest.raises(DataError) as exc:
            load_bundle(saved)
        assert exc.value.code == "schema_mismatch"

    def test_unresolved_foreign_key(self, saved):
        self.rewrite(saved / "counts.csv", lambda lines: lines + ["NOPE,2019-04-01 00:00,1"])
        with pytest.raises(DataError) as exc:
            load_bundle(saved)
        assert exc.value.code == "unresolved_foreign_key"

    def test_date_outside_study(self, saved):
        def edit(lines):
            sid = lines[1].split(",")[0]
            return lines + [f"{sid},2020-01-05 00:00,4"]

        self.rewrite(saved / "counts.csv", edit)
        with pytest.raises(DataError) as exc:
            load_bundle(saved)
        assert exc.value.code == "date_out_of_period"

    def test_missing_file(self, saved):
        (saved / "poi.csv").unlink()
        with pytest.raises(ConfigError) as exc:
            load_bundle(saved)
        assert exc.value.code == "missing_file"

    def test_path_override(self, saved, tmp_path_factory):
        other = tmp_path_factory.mktemp("alt") / "w.csv"
        other.write_bytes((saved / "weather.csv").read_bytes())
        (saved / "weather.csv").unlink()
        assert len(load_bundle(saved, {"weather": other}).weather) > 0
        with pytest.raises(ConfigError):
            load_bundle(saved, {"rainfall": other})

    def test_trips_round_trip(self, tmp_path, small_city):
        g = small_city[0].street_graph
        routed = [route_trip(g, t) for t in small_city[0].trips[:20]]
        write_trips(routed, tmp_path / "r.csv", routed=True)
        back = read_trips(tmp_path / "r.csv")
        assert [t.routed_distance for t in back] == [t.routed_distance for t in routed]
        assert [t.route for t in back] == [t.route for t in routed]


def test_schema_text_lists_columns():
    for source, cols in SCHEMAS.items():
        assert schema_text(source).splitlines()[0] == ",".join(cols)
    with pytest.raises(ConfigError):
        schema_text("nope")


def test_trip_invariants():
    with pytest.raises(ValueError):
        Trip("b", A, B, T0, T0)
    t = Trip("b", A, B, T0, T0 + dt.timedelta(minutes=30)).with_route([A, B], 5000.0)
    assert t.duration == 1800 and math.isclose(t.mean_speed, 10.0)
