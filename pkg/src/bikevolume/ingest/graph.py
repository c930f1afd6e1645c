"""Street graph loaded from GeoJSON and shortest-path bicycle routing."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..core import GeoPoint, StreetSegment, haversine_array
from ..errors import DataError
from .trips import Trip

_COORD_DIGITS = 7


@dataclass(frozen=True)
class StreetEdge:
    segment: StreetSegment
    u: int
    v: int
    bicycle: bool = True
    maxspeed: float = 50.0
    lane_type: int = 0

    @property
    def id(self):
        return self.segment.id


class StreetGraph:
    """Undirected street network; nodes are polyline endpoints."""

    def __init__(self, nodes: list[GeoPoint], edges: list[StreetEdge]):
        self.nodes = list(nodes)
        self.edges = list(edges)
        self._node_lat = np.array([p.lat for p in self.nodes])
        self._node_lon = np.array([p.lon for p in self.nodes])
        n = len(self.nodes)
        best = {}
        for k, e in enumerate(self.edges):
            if not e.bicycle:
                continue
            key = (min(e.u, e.v), max(e.u, e.v))
            if key not in best or e.segment.length < self.edges[best[key]].segment.length:
                best[key] = k
        self._edge_for_pair = best
        rows, cols, vals = [], [], []
        for (a, b), k in sorted(best.items()):
            length = self.edges[k].segment.length
            rows += [a, b]
            cols += [b, a]
            vals += [length, length]
        self._adj = csr_matrix((vals, (rows, cols)), shape=(n, n))
        self._bike_nodes = np.zeros(n, dtype=bool)
        for a, b in best:
            self._bike_nodes[a] = self._bike_nodes[b] = True
        self._sssp = lru_cache(maxsize=4096)(self._single_source)

    @classmethod
    def from_segments(cls, records) -> "StreetGraph":
        """``records``: iterable of (segment, bicycle, maxspeed, lane_type)."""
        index: dict[tuple, int] = {}
        nodes: list[GeoPoint] = []

        def node_of(p: GeoPoint) -> int:
            key = (round(p.lat, _COORD_DIGITS), round(p.lon, _COORD_DIGITS))
            if key not in index:
                index[key] = len(nodes)
                nodes.append(p)
            return index[key]

        edges = []
        for seg, bicycle, maxspeed, lane_type in records:
            u = node_of(seg.polyline[0])
            v = node_of(seg.polyline[-1])
            edges.append(StreetEdge(seg, u, v, bool(bicycle), float(maxspeed), int(lane_type)))
        return cls(nodes, edges)

    @classmethod
    def from_geojson(cls, obj) -> "StreetGraph":
        if obj.get("type") != "FeatureCollection":
            raise DataError("street graph must be a GeoJSON FeatureCollection", code="schema_mismatch")
        records = []
        for i, feat in enumerate(obj.get("features", [])):
            geom = feat.get("geometry") or {}
            props = feat.get("properties") or {}
            if geom.get("type") != "LineString" or "id" not in props or "bicycle" not in props:
                raise DataError(f"street graph feature {i} is not a LineString with id/bicycle", code="schema_mismatch",
                                feature=i)
            pts = tuple(GeoPoint(float(lat), float(lon)) for lon, lat in geom["coordinates"])
            records.append((
                StreetSegment(str(props["id"]), pts),
                bool(props["bicycle"]),
                props.get("maxspeed") if props.get("maxspeed") is not None else 50.0,
                props.get("lane_type", 0),
            ))
        return cls.from_segments(records)

    @classmethod
    def read(cls, path) -> "StreetGraph":
        with open(path, encoding="utf-8") as fh:
            return cls.from_geojson(json.load(fh))

    def to_geojson(self) -> dict:
        feats = []
        for e in self.edges:
            feats.append({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": [[p.lon, p.lat] for p in e.segment.polyline]},
                "properties": {"id": e.id, "bicycle": e.bicycle, "maxspeed": e.maxspeed, "lane_type": e.lane_type},
            })
        return {"type": "FeatureCollection", "features": feats}

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_geojson(), fh)
            fh.write("\n")

    @property
    def segments(self) -> list[StreetSegment]:
        return [e.segment for e in self.edges]

    def nearest_node(self, p: GeoPoint, bicycle_only: bool = True) -> tuple[int, float]:
        d = haversine_array(p.lat, p.lon, self._node_lat, self._node_lon)
        if bicycle_only and self._bike_nodes.any():
            d = np.where(self._bike_nodes, d, np.inf)
        k = int(np.argmin(d))
        return k, float(d[k])

    def _single_source(self, source: int):
        dist, pred = dijkstra(self._adj, directed=False, indices=source, return_predecessors=True)
        return dist, pred

    def shortest_path(self, a: int, b: int) -> tuple[list[int], float] | None:
        """Node sequence and length over bicycle-permitted edges, or None if disconnected."""
        dist, pred = self._sssp(a)
        if not np.isfinite(dist[b]):
            return None
        path = [b]
        while path[-1] != a:
            path.append(int(pred[path[-1]]))
        path.reverse()
        return path, float(dist[b])

    def path_geometry(self, path: list[int]) -> list[GeoPoint]:
        pts = [self.nodes[path[0]]]
        for a, b in zip(path[:-1], path[1:]):
            edge = self.edges[self._edge_for_pair[(min(a, b), max(a, b))]]
            poly = list(edge.segment.polyline)
            if edge.u != a:
                poly.reverse()
            pts.extend(poly[1:])
        return pts


def route_trip(graph: StreetGraph, trip: Trip) -> Trip:
    """Attach the shortest bicycle route between the nodes nearest to the trip endpoints.

    The route runs origin -> snapped node -> ... -> snapped node -> destination,
    so its length is the network distance plus both snap distances.
    """
    a, da = graph.nearest_node(trip.origin)
    b, db = graph.nearest_node(trip.destination)
    found = graph.shortest_path(a, b)
    if found is None:
        return Trip(trip.bike_id, trip.origin, trip.destination, trip.start, trip.end, unroutable=True)
    path, length = found
    route = [trip.origin] + graph.path_geometry(path) + [trip.destination]
    return trip.with_route(route, length + da + db)
