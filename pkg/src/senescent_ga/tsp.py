"""Symmetric Euclidean TSP instances: generation, evaluation and file I/O."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _kernels

EDGE_WEIGHT_TYPE = "EUC2D"


class InvalidInstanceError(ValueError):
    pass


class InvalidTourError(ValueError):
    pass


class InstanceParseError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


@dataclass(frozen=True)
class City:
    id: int
    x: float
    y: float


@dataclass(frozen=True, eq=False)
class TspInstance:
    """An immutable city set with a precomputed Euclidean distance table.

    ``coords`` is an ``(n, 2)`` float array; city ``i`` sits at ``coords[i]``.
    """

    coords: np.ndarray
    name: str = "instance"
    dist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise InvalidInstanceError(f"coords must have shape (n, 2), got {coords.shape}")
        if coords.shape[0] < 3:
            raise InvalidInstanceError(f"need at least 3 cities, got {coords.shape[0]}")
        if not np.all(np.isfinite(coords)):
            raise InvalidInstanceError("coordinates must be finite")
        coords.setflags(write=False)
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=-1))
        dist.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "dist", dist)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def cities(self) -> list[City]:
        return [City(i, float(x), float(y)) for i, (x, y) in enumerate(self.coords)]

    @cached_property
    def fingerprint(self) -> str:
        """Short SHA-256 of the coordinate list, used to refuse cross-instance comparisons."""
        digest = hashlib.sha256()
        digest.update(np.asarray(self.coords.shape, dtype="<i8").tobytes())
        digest.update(self.coords.astype("<f8").tobytes())
        return digest.hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, TspInstance):
            return NotImplemented
        return self.name == other.name and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.fingerprint)


def generate_instance(seed: int, n: int = 100, extent: float = 1000.0) -> TspInstance:
    """Uniform random cities in ``[0, extent)^2`` drawn from PCG64(seed)."""
    if n < 3:
        raise InvalidInstanceError(f"n must be >= 3, got {n}")
    if not extent > 0:
        raise InvalidInstanceError(f"extent must be positive, got {extent}")
    rng = np.random.Generator(np.random.PCG64(seed))
    coords = rng.random((n, 2)) * extent
    return TspInstance(coords, name=f"rand{n}-s{seed}")


def check_tour(tour, n: int) -> np.ndarray:
    arr = np.asarray(tour)
    if arr.ndim != 1 or arr.shape[0] != n or not np.issubdtype(arr.dtype, np.integer):
        raise InvalidTourError(f"tour must be a length-{n} integer sequence")
    if not np.array_equal(np.sort(arr), np.arange(n)):
        raise InvalidTourError("tour is not a permutation of the city ids")
    return arr


def tour_length(inst: TspInstance, tour) -> float:
    """Length of the closed tour, including the edge from the last city back to the first."""
    arr = check_tour(tour, inst.n)
    return float(_kernels.tour_length(arr.astype(np.int64, copy=False), inst.dist))


def save_instance(inst: TspInstance, path) -> None:
    lines = [
        f"NAME : {inst.name}",
        f"DIMENSION : {inst.n}",
        f"EDGE_WEIGHT_TYPE : {EDGE_WEIGHT_TYPE}",
        "NODE_COORD_SECTION",
    ]
    # repr() round-trips doubles exactly
    lines += [f"{i} {float(x)!r} {float(y)!r}" for i, (x, y) in enumerate(inst.coords)]
    lines.append("EOF")
    Path(path).write_text("\n".join(lines) + "\n")


def load_instance(path) -> TspInstance:
    path = Path(path)
    header: dict[str, str] = {}
    nodes: dict[int, tuple[float, float]] = {}
    in_nodes = False
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if line == "NODE_COORD_SECTION":
            in_nodes = True
            continue
        if not in_nodes:
            key, sep, value = line.partition(":")
            if not sep:
                raise InstanceParseError(path, lineno, f"expected 'KEY : value', got {line!r}")
            header[key.strip().upper()] = value.strip()
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InstanceParseError(path, lineno, f"expected 'id x y', got {line!r}")
        try:
            cid = int(parts[0])
            x, y = float(parts[1]), float(parts[2])
        except ValueError:
            raise InstanceParseError(path, lineno, f"non-numeric field in {line!r}") from None
        if cid in nodes:
            raise InstanceParseError(path, lineno, f"duplicate city id {cid}")
        nodes[cid] = (x, y)

    for key in ("NAME", "DIMENSION", "EDGE_WEIGHT_TYPE"):
        if key not in header:
            raise InstanceParseError(path, 0, f"missing header field {key}")
    if header["EDGE_WEIGHT_TYPE"] not in (EDGE_WEIGHT_TYPE, "EUC_2D"):
        raise InstanceParseError(path, 0, f"unsupported EDGE_WEIGHT_TYPE {header['EDGE_WEIGHT_TYPE']}")
    try:
        dim = int(header["DIMENSION"])
    except ValueError:
        raise InstanceParseError(path, 0, f"bad DIMENSION {header['DIMENSION']!r}") from None
    if sorted(nodes) != list(range(dim)):
        raise InstanceParseError(path, 0, f"city ids must be exactly 0..{dim - 1}")
    coords = np.array([nodes[i] for i in range(dim)], dtype=np.float64).reshape(-1, 2)
    try:
        return TspInstance(coords, name=header["NAME"])
    except InvalidInstanceError as exc:
        raise InstanceParseError(path, 0, str(exc)) from None
