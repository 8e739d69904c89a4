"""Problem instances on a square plane and their Euclidean distances.

Instances are drawn with numpy's PCG64 generator: each coordinate is
``extent * rng.random()``, x before y, one point at a time.  The first drawn
point is the depot (index 0).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSizeError

DEFAULT_EXTENT = 5.0
DEFAULT_SIZES = (10, 15, 20, 25, 30, 35)


@dataclass(frozen=True)
class Point:
    x: float
    y: float


@dataclass(frozen=True)
class Instance:
    id: str
    nodes: tuple[Point, ...]
    seed: int | None = None
    extent: float = DEFAULT_EXTENT
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise InvalidSizeError(f"instance needs at least 2 nodes, got {len(self.nodes)}")
        if len(set(self.nodes)) != len(self.nodes):
            raise InvalidSizeError("instance contains duplicate coordinates")

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def depot(self) -> Point:
        return self.nodes[0]

    def matrix(self) -> np.ndarray:
        """Cached distance matrix (read-only)."""
        if self._matrix is None:
            mat = distance_matrix(self)
            mat.setflags(write=False)
            object.__setattr__(self, "_matrix", mat)
        return self._matrix


def distance(a: Point, b: Point) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def distance_matrix(inst: Instance) -> np.ndarray:
    xy = np.array([(p.x, p.y) for p in inst.nodes], dtype=np.float64)
    diff = xy[:, None, :] - xy[None, :, :]
    mat = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(mat, 0.0)
    return mat


def generate_instance(n: int, seed: int, extent: float = DEFAULT_EXTENT, id: str | None = None) -> Instance:
    """Draw ``n`` distinct points i.i.d. uniform on ``[0, extent]^2``.

    Deterministic in ``(n, seed, extent)``.  A draw that collides with an
    earlier point is discarded and redrawn from the same stream.
    """
    if n < 2:
        raise InvalidSizeError(f"n must be >= 2, got {n}")
    if not extent > 0:
        raise InvalidSizeError(f"extent must be positive, got {extent}")
    rng = np.random.Generator(np.random.PCG64(seed))
    seen: set[Point] = set()
    nodes: list[Point] = []
    while len(nodes) < n:
        p = Point(float(extent * rng.random()), float(extent * rng.random()))
        if p in seen:
            continue
        seen.add(p)
        nodes.append(p)
    return Instance(id=id or f"n{n}_s{seed}", nodes=tuple(nodes), seed=seed, extent=extent)


def batch_seed(base_seed: int, n: int, index: int) -> int:
    """Per-instance seed for the ``index``-th instance of size ``n`` in a batch."""
    state = np.random.SeedSequence([base_seed, n, index]).generate_state(2, np.uint32)
    return (int(state[0]) << 32) | int(state[1])


def generate_batch(sizes, count: int, seed: int, extent: float = DEFAULT_EXTENT) -> list[Instance]:
    out = []
    for n in sizes:
        for i in range(count):
            out.append(generate_instance(n, batch_seed(seed, n, i), extent, id=f"n{n:02d}_{i:03d}"))
    return out


# CSV interchange: header ``index,x,y``; row 0 is the depot.  ``repr`` of a
# float is the shortest string that round-trips, so files reload bit-exactly.

def instance_to_csv(inst: Instance) -> str:
    buf = io.StringIO()
    buf.write("index,x,y\n")
    for i, p in enumerate(inst.nodes):
        buf.write(f"{i},{p.x!r},{p.y!r}\n")
    return buf.getvalue()


def instance_from_csv(text: str, id: str, seed: int | None = None, extent: float = DEFAULT_EXTENT) -> Instance:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or set(rows[0]) != {"index", "x", "y"}:
        raise InvalidSizeError("instance CSV must have header index,x,y")
    rows.sort(key=lambda r: int(r["index"]))
    if [int(r["index"]) for r in rows] != list(range(len(rows))):
        raise InvalidSizeError("instance CSV indices must be 0..n-1")
    nodes = tuple(Point(float(r["x"]), float(r["y"])) for r in rows)
    return Instance(id=id, nodes=nodes, seed=seed, extent=extent)


def write_instance(inst: Instance, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(instance_to_csv(inst), newline="\n")


def read_instance(path: Path, seed: int | None = None) -> Instance:
    return instance_from_csv(Path(path).read_text(), id=Path(path).stem, seed=seed)
