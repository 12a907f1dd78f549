"""Search-region decomposition: 1 m scoring boxes and the coverage lane graph."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BOX_SIZE = 1.0


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle with its lower-left corner at ``(x0, y0)``.

    Width runs along x, height along y. Both must be whole meters so the
    region tiles exactly into 1x1 m boxes.
    """

    x0: float
    y0: float
    width: float
    height: float

    def __post_init__(self):
        for name in ("x0", "y0", "width", "height"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("region is empty: width and height must be positive")
        if self.width != int(self.width) or self.height != int(self.height):
            raise ValueError("region width and height must be whole meters")

    @property
    def x1(self) -> float:
        return self.x0 + self.width

    @property
    def y1(self) -> float:
        return self.y0 + self.height

    @property
    def shape(self) -> tuple[int, int]:
        """Box grid shape as ``(rows, cols)``; rows follow y, cols follow x."""
        return int(self.height), int(self.width)

    @property
    def n_boxes(self) -> int:
        rows, cols = self.shape
        return rows * cols

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, p, tol: float = 0.0) -> bool:
        x, y = p
        return (self.x0 - tol <= x <= self.x1 + tol) and (self.y0 - tol <= y <= self.y1 + tol)

    def clip(self, p) -> tuple[float, float]:
        x, y = p
        return (min(max(x, self.x0), self.x1), min(max(y, self.y0), self.y1))

    def box_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Center coordinates of every box as two ``(rows, cols)`` arrays."""
        rows, cols = self.shape
        xs = self.x0 + np.arange(cols) + 0.5
        ys = self.y0 + np.arange(rows) + 0.5
        return np.meshgrid(xs, ys)


@dataclass(frozen=True)
class Box:
    index: int
    x0: float
    y0: float
    size: float = BOX_SIZE

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + self.size / 2, self.y0 + self.size / 2)


def box(region: Region, index: int) -> Box:
    rows, cols = region.shape
    if not 0 <= index < rows * cols:
        raise IndexError(f"box index {index} out of range for {rows}x{cols} grid")
    row, col = divmod(index, cols)
    return Box(index, region.x0 + col, region.y0 + row)


def iter_boxes(region: Region):
    for i in range(region.n_boxes):
        yield box(region, i)


def box_of(region: Region, p) -> int:
    """Index of the box containing ``p`` (row-major, row 0 at the lower edge).

    Points on an interior box edge belong to the box whose lower-left
    corner is ``floor(p)``; points on the far region edge fold into the
    last row/column.
    """
    x, y = p
    if not region.contains((x, y)):
        raise ValueError(f"point {p!r} lies outside the region")
    rows, cols = region.shape
    col = min(int(math.floor(x - region.x0)), cols - 1)
    row = min(int(math.floor(y - region.y0)), rows - 1)
    return row * cols + col


@dataclass(frozen=True)
class LaneGraph:
    """Coverage graph: node 1 is the depot, lane ``i`` owns nodes ``2i+2`` and ``2i+3``.

    ``nodes`` is a ``(M, 2)`` array where row ``j`` holds node id ``j + 1``.
    """

    nodes: np.ndarray
    lane_distance: float
    region: Region
    distances: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.distances is None:
            diff = self.nodes[:, None, :] - self.nodes[None, :, :]
            object.__setattr__(self, "distances", np.hypot(diff[..., 0], diff[..., 1]))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_lanes(self) -> int:
        return (self.n_nodes - 1) // 2

    @property
    def depot(self) -> int:
        return 1

    @property
    def lane_pairs(self) -> list[tuple[int, int]]:
        return [(2 * i + 2, 2 * i + 3) for i in range(self.n_lanes)]

    def position(self, node_id: int) -> np.ndarray:
        self._check(node_id)
        return self.nodes[node_id - 1]

    def d(self, i: int, j: int) -> float:
        self._check(i)
        self._check(j)
        return float(self.distances[i - 1, j - 1])

    def lane_of(self, node_id: int) -> int | None:
        """Lane index of a node, or None for the depot."""
        self._check(node_id)
        return None if node_id == 1 else (node_id - 2) // 2

    def partner(self, node_id: int) -> int:
        lane = self.lane_of(node_id)
        if lane is None:
            raise ValueError("the depot has no lane partner")
        a, b = 2 * lane + 2, 2 * lane + 3
        return b if node_id == a else a

    def lane_length(self, lane: int) -> float:
        return self.d(2 * lane + 2, 2 * lane + 3)

    def _check(self, node_id: int):
        if not (isinstance(node_id, (int, np.integer)) and 1 <= node_id <= self.n_nodes):
            raise KeyError(f"unknown node id {node_id!r}")


def build_lane_graph(region: Region, lane_distance: float, depot=None) -> LaneGraph:
    """Lay coverage lanes parallel to the y axis, ``lane_distance`` apart.

    The first lane sits ``lane_distance / 2`` in from the left edge and
    every lane spans the full region height. The depot defaults to the
    midpoint of the lower edge.
    """
    if not lane_distance > 0:
        raise ValueError(f"lane_distance must be positive, got {lane_distance}")
    if lane_distance > region.width:
        raise ValueError(
            f"lane_distance {lane_distance} exceeds region width {region.width}"
        )
    if depot is None:
        depot = (region.x0 + region.width / 2, region.y0)
    depot = (float(depot[0]), float(depot[1]))
    if not all(math.isfinite(c) for c in depot):
        raise ValueError("depot must be finite")

    n_lanes = int(math.floor(region.width / lane_distance + 1e-9))
    xs = region.x0 + lane_distance / 2 + lane_distance * np.arange(n_lanes)
    nodes = np.empty((1 + 2 * n_lanes, 2))
    nodes[0] = depot
    nodes[1::2, 0] = xs
    nodes[1::2, 1] = region.y0
    nodes[2::2, 0] = xs
    nodes[2::2, 1] = region.y1
    return LaneGraph(nodes=nodes, lane_distance=float(lane_distance), region=region)
