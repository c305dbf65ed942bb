"""Dynamic occupancy grid: per-cell evidence state and the frame container.

A frame is a dense row-major grid of cells. Each cell carries two evidence
masses (occupied / free, the remainder is unassigned), a 2-D velocity
estimate and its 2x2 covariance. Cell positions are not stored; they are
computed from the cell index and the grid geometry, with the vehicle frame
anchored by ego_pose_in_grid.

JSON-lines serialization packs the seven per-cell channels as base64 arrays
(or nested lists for small frames).
"""
from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass

import numpy as np

# Covariances with a determinant below this are treated as singular.
COV_DET_FLOOR = 1e-12

_FIELD_NAMES = ("m_occ", "m_free", "vel_x", "vel_y", "var_vx", "var_vy", "cov_vxvy")
_MASS_TOL = 1e-9


class SingularCovarianceError(ValueError):
    """Velocity covariance is not invertible at the working precision."""


class ZeroVelocityError(ValueError):
    """Orientation is undefined for a zero velocity vector."""


@dataclass(frozen=True)
class CellState:
    """State of a single grid cell.

    pos is the cell center in the vehicle frame. vel_cov is the symmetric
    covariance of vel.
    """

    m_occ: float
    m_free: float
    pos: np.ndarray
    vel: np.ndarray
    vel_cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pos", np.asarray(self.pos, dtype=float))
        object.__setattr__(self, "vel", np.asarray(self.vel, dtype=float))
        object.__setattr__(self, "vel_cov", np.asarray(self.vel_cov, dtype=float))
        if self.pos.shape != (2,) or self.vel.shape != (2,):
            raise ValueError("pos and vel must be 2-vectors")
        if self.vel_cov.shape != (2, 2):
            raise ValueError("vel_cov must be 2x2")
        if not (-_MASS_TOL <= self.m_occ <= 1.0 + _MASS_TOL
                and -_MASS_TOL <= self.m_free <= 1.0 + _MASS_TOL):
            raise ValueError("evidence masses must lie in [0, 1]")
        if self.m_occ + self.m_free > 1.0 + _MASS_TOL:
            raise ValueError("evidence masses must sum to at most 1")
        if abs(self.vel_cov[0, 1] - self.vel_cov[1, 0]) > 1e-9:
            raise ValueError("vel_cov must be symmetric")


def occupancy_probability(cell: CellState) -> float:
    """Pignistic occupancy probability: the unassigned mass splits evenly."""
    return 0.5 * cell.m_occ + 0.5 * (1.0 - cell.m_free)


def cell_speed(cell: CellState) -> float:
    return math.hypot(float(cell.vel[0]), float(cell.vel[1]))


def cell_orientation(cell: CellState) -> float:
    """Direction of motion in (-pi, pi]. Undefined (raises) at zero velocity."""
    vx, vy = float(cell.vel[0]), float(cell.vel[1])
    if vx == 0.0 and vy == 0.0:
        raise ZeroVelocityError("cell velocity is (0, 0)")
    return math.atan2(vy, vx)


def zero_velocity_mahalanobis(cell: CellState) -> float:
    """Mahalanobis distance of the velocity estimate from zero.

    Separates genuinely moving cells from noise around zero. Raises
    SingularCovarianceError when the covariance determinant falls below
    COV_DET_FLOOR.
    """
    a = float(cell.vel_cov[0, 0])
    b = float(cell.vel_cov[0, 1])
    c = float(cell.vel_cov[1, 1])
    det = a * c - b * b
    if det < COV_DET_FLOOR:
        raise SingularCovarianceError(f"covariance determinant {det} below floor")
    vx, vy = float(cell.vel[0]), float(cell.vel[1])
    q = (c * vx * vx - 2.0 * b * vx * vy + a * vy * vy) / det
    return math.sqrt(max(q, 0.0))


class DogmaFrame:
    """Dense occupancy grid snapshot at one timestamp.

    The grid spans [0, width_m] x [0, height_m] in its own frame; cell
    (row, col) has its center at ((col + 0.5) * cell_size,
    (row + 0.5) * cell_size). Flat indices are row-major:
    index = row * n_cols + col. ego_pose_in_grid = (x, y, heading) anchors
    the vehicle frame inside the grid.
    """

    def __init__(self, width_m: float, height_m: float, cell_size: float,
                 timestamp: float, ego_pose_in_grid, fields: dict,
                 validate: bool = True):
        self.width_m = float(width_m)
        self.height_m = float(height_m)
        self.cell_size = float(cell_size)
        self.timestamp = float(timestamp)
        self.ego_pose_in_grid = np.asarray(ego_pose_in_grid, dtype=float)

        nc = self.width_m / self.cell_size
        nr = self.height_m / self.cell_size
        if abs(nc - round(nc)) > 1e-6 or abs(nr - round(nr)) > 1e-6:
            raise ValueError("grid extent must be an integer number of cells")
        self.n_cols = int(round(nc))
        self.n_rows = int(round(nr))

        if self.ego_pose_in_grid.shape != (3,):
            raise ValueError("ego_pose_in_grid must be (x, y, heading)")
        missing = [k for k in _FIELD_NAMES if k not in fields]
        if missing:
            raise ValueError(f"missing cell fields: {missing}")
        shape = (self.n_rows, self.n_cols)
        for name in _FIELD_NAMES:
            arr = np.ascontiguousarray(fields[name], dtype=float)
            if arr.shape != shape:
                raise ValueError(f"field {name} has shape {arr.shape}, want {shape}")
            setattr(self, name, arr)
        if validate:
            self._validate_masses()

    def _validate_masses(self):
        if (self.m_occ.min() < -_MASS_TOL or self.m_free.min() < -_MASS_TOL
                or (self.m_occ + self.m_free).max() > 1.0 + _MASS_TOL):
            raise ValueError("evidence masses out of range")

    @classmethod
    def empty(cls, width_m: float, height_m: float, cell_size: float,
              timestamp: float, ego_pose_in_grid=None) -> "DogmaFrame":
        """All-unknown frame (zero masses, zero velocities, unit covariance)."""
        nc = int(round(width_m / cell_size))
        nr = int(round(height_m / cell_size))
        if ego_pose_in_grid is None:
            ego_pose_in_grid = (0.5 * width_m, 0.5 * height_m, 0.0)
        fields = {name: np.zeros((nr, nc)) for name in _FIELD_NAMES}
        fields["var_vx"] = np.ones((nr, nc))
        fields["var_vy"] = np.ones((nr, nc))
        return cls(width_m, height_m, cell_size, timestamp, ego_pose_in_grid,
                   fields, validate=False)

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    # ---- positions ----------------------------------------------------

    def grid_positions(self, flat_idx) -> np.ndarray:
        """Cell centers in the grid frame for flat indices, shape (N, 2)."""
        idx = np.asarray(flat_idx)
        rows, cols = np.divmod(idx, self.n_cols)
        return np.stack([(cols + 0.5) * self.cell_size,
                         (rows + 0.5) * self.cell_size], axis=-1)

    def vehicle_positions(self, flat_idx) -> np.ndarray:
        """Cell centers in the vehicle frame for flat indices."""
        p = self.grid_positions(flat_idx) - self.ego_pose_in_grid[:2]
        phi = float(self.ego_pose_in_grid[2])
        if phi == 0.0:
            return p
        c, s = math.cos(phi), math.sin(phi)
        rot = np.array([[c, s], [-s, c]])  # rotation by -phi
        return p @ rot.T

    def cell(self, flat_idx: int) -> CellState:
        """Materialize one cell as a CellState (position in vehicle frame)."""
        i = int(flat_idx)
        if not 0 <= i < self.n_cells:
            raise IndexError(f"cell index {i} out of range")
        r, c = divmod(i, self.n_cols)
        cov = np.array([[self.var_vx[r, c], self.cov_vxvy[r, c]],
                        [self.cov_vxvy[r, c], self.var_vy[r, c]]])
        return CellState(
            m_occ=float(self.m_occ[r, c]),
            m_free=float(self.m_free[r, c]),
            pos=self.vehicle_positions(i),
            vel=np.array([self.vel_x[r, c], self.vel_y[r, c]]),
            vel_cov=cov,
        )

    # ---- vectorized per-cell quantities --------------------------------

    def occupancy(self) -> np.ndarray:
        """Occupancy probability for every cell, shape (n_rows, n_cols)."""
        return 0.5 * self.m_occ + 0.5 * (1.0 - self.m_free)

    def speeds(self) -> np.ndarray:
        return np.hypot(self.vel_x, self.vel_y)

    def orientations(self) -> np.ndarray:
        """atan2 orientation per cell; 0 where the velocity is exactly zero."""
        return np.arctan2(self.vel_y, self.vel_x)

    def mahalanobis_from_zero(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-cell distance of velocity from zero and a validity mask.

        Cells whose covariance determinant is below COV_DET_FLOOR are
        invalid; their distance entry is 0.
        """
        a, b, c = self.var_vx, self.cov_vxvy, self.var_vy
        det = a * c - b * b
        valid = det >= COV_DET_FLOOR
        safe_det = np.where(valid, det, 1.0)
        q = (c * self.vel_x**2 - 2.0 * b * self.vel_x * self.vel_y
             + a * self.vel_y**2) / safe_det
        d = np.sqrt(np.maximum(q, 0.0))
        return np.where(valid, d, 0.0), valid

    # ---- serialization --------------------------------------------------

    def to_record(self, encoding: str = "b64", dtype: str = "f4") -> dict:
        """JSON-serializable record. encoding 'b64' packs fields as base64
        little-endian arrays of the given dtype; 'array' nests plain lists."""
        if encoding not in ("b64", "array"):
            raise ValueError(f"unknown encoding {encoding!r}")
        if dtype not in ("f4", "f8"):
            raise ValueError(f"unknown dtype {dtype!r}")
        rec = {
            "timestamp": self.timestamp,
            "width_m": self.width_m,
            "height_m": self.height_m,
            "cell_size": self.cell_size,
            "ego_pose_in_grid": [float(v) for v in self.ego_pose_in_grid],
            "encoding": encoding,
            "dtype": dtype,
            "fields": {},
        }
        np_dtype = np.dtype("<" + dtype)
        for name in _FIELD_NAMES:
            arr = getattr(self, name).astype(np_dtype)
            if encoding == "b64":
                rec["fields"][name] = base64.b64encode(arr.tobytes()).decode("ascii")
            else:
                rec["fields"][name] = arr.astype(float).tolist()
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "DogmaFrame":
        encoding = rec.get("encoding", "b64")
        np_dtype = np.dtype("<" + rec.get("dtype", "f4"))
        nc = int(round(rec["width_m"] / rec["cell_size"]))
        nr = int(round(rec["height_m"] / rec["cell_size"]))
        fields = {}
        for name in _FIELD_NAMES:
            raw = rec["fields"][name]
            if encoding == "b64":
                buf = base64.b64decode(raw)
                arr = np.frombuffer(buf, dtype=np_dtype).reshape(nr, nc)
            else:
                arr = np.asarray(raw, dtype=float)
            fields[name] = arr.astype(float)
        return cls(rec["width_m"], rec["height_m"], rec["cell_size"],
                   rec["timestamp"], rec["ego_pose_in_grid"], fields)


def write_frames_jsonl(frames, path, encoding: str = "b64", dtype: str = "f4"):
    """Write an iterable of DogmaFrame to a JSON-lines file."""
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(json.dumps(frame.to_record(encoding, dtype),
                                separators=(",", ":"), sort_keys=True))
            fh.write("\n")


def read_frames_jsonl(path):
    """Yield DogmaFrame objects from a JSON-lines file."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield DogmaFrame.from_record(json.loads(line))
