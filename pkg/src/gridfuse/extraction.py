"""Object extraction from dynamic occupancy grid frames.

Five stages per frame:

1. search mask: cells with enough occupied evidence to be worth touching;
2. density clustering of the mask with a joint position + velocity
   neighborhood condition;
3. per-cell validation mask: occupancy probability, speed, velocity
   variance, and distance-of-velocity-from-zero thresholds that separate
   genuinely moving cells from static structure and noise;
4. cluster validation: a cluster survives when the fraction of its members
   that pass stage 3 reaches a ratio threshold;
5. object creation: circular-mean orientation, mean speed, an oriented
   bounding box aligned with the mean orientation and inflated by half a
   cell on every side, and the box anchor nearest the ego as the reference
   point. Labels then carry over from the previous frame through a gated
   minimum-cost assignment on constant-velocity-predicted box centers.

The clustering is scan-order independent by construction: core cells are
grouped as connected components of the core-core neighbor graph, and a
border cell joins the cluster of its lowest-ordinal (row-major) core
neighbor. Cell-to-cell position distances are evaluated on the integer cell
lattice (cell_size^2 * (di^2 + dj^2) compared against the squared radius) so
exact-threshold pairs behave identically everywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .assignment import Assignment, CostMatrix, hungarian_assign
from .dogma import COV_DET_FLOOR, DogmaFrame
from .geometry import OrientedBox, wrap_angle


@dataclass(frozen=True)
class ExtractionConfig:
    """Thresholds and gates for grid-object extraction.

    Defaults are the operating point for a 0.15 m grid: the variance and
    distance-from-zero thresholds are tuned so that cells of static
    structure (high velocity variance) and measurement noise (velocity not
    significantly away from zero) both drop out of the validation mask.
    """

    eps_m_occ: float = 0.3        # search mask: m_occ strictly above this
    eps_p_occ: float = 0.8        # validation: occupancy probability >=
    eps_speed: float = 0.3        # validation: cell speed >= (m/s)
    eps_var_vx: float = 5.0       # validation: velocity variance <=
    eps_var_vy: float = 5.0
    eps_d0: float = 9.0           # validation: velocity-from-zero distance >=
    eps_pos: float = 1.2          # clustering: position radius (m)
    eps_vel: float = 1.0          # clustering: velocity radius (m/s)
    eps_ratio: float = 0.1        # cluster validation: validated fraction >=
    min_cluster_cells: int = 4    # core condition, neighborhood includes self
    cv_gate: float = 2.0          # label assignment gate (m)

    def validate(self):
        for name in ("eps_m_occ", "eps_p_occ", "eps_speed", "eps_var_vx",
                     "eps_var_vy", "eps_d0", "eps_pos", "eps_vel",
                     "eps_ratio", "cv_gate"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if self.min_cluster_cells < 1:
            raise ValueError("min_cluster_cells must be at least 1")


@dataclass
class CellCluster:
    """Flat cell indices of one cluster (sorted ascending) and the number
    of members that passed the validation mask."""

    member_indices: np.ndarray
    validated_count: int = 0

    @property
    def size(self) -> int:
        return len(self.member_indices)

    @property
    def validated_ratio(self) -> float:
        return self.validated_count / self.size if self.size else 0.0


@dataclass
class GridObject:
    """Object hypothesis extracted from one grid frame.

    ref_pos/ref_label name the bounding-box anchor closest to the ego;
    bbox holds the four corners ordered [bl, fl, fr, br] in the same frame
    as ref_pos. label is None until assignment.
    """

    ref_pos: np.ndarray
    ref_label: str
    speed: float
    orientation: float
    bbox: np.ndarray
    timestamp: float
    label: int | None = None
    cell_count: int = 0

    def __post_init__(self):
        self.ref_pos = np.asarray(self.ref_pos, dtype=float)
        self.bbox = np.asarray(self.bbox, dtype=float)
        self.orientation = float(wrap_angle(self.orientation))

    def box(self) -> OrientedBox:
        return OrientedBox.from_corners(self.bbox)

    @property
    def center(self) -> np.ndarray:
        return self.bbox.mean(axis=0)

    def to_record(self) -> dict:
        return {
            "ref_pos": [float(v) for v in self.ref_pos],
            "ref_label": self.ref_label,
            "speed": float(self.speed),
            "orientation": float(self.orientation),
            "bbox": [[float(x) for x in row] for row in self.bbox],
            "timestamp": float(self.timestamp),
            "label": self.label,
            "cell_count": int(self.cell_count),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "GridObject":
        return cls(
            ref_pos=rec["ref_pos"],
            ref_label=rec["ref_label"],
            speed=float(rec["speed"]),
            orientation=float(rec["orientation"]),
            bbox=rec["bbox"],
            timestamp=float(rec["timestamp"]),
            label=rec.get("label"),
            cell_count=int(rec.get("cell_count", 0)),
        )


# ---- stage 1 and 3: masks ---------------------------------------------------


def build_search_mask(frame: DogmaFrame, cfg: ExtractionConfig) -> np.ndarray:
    """Flat indices (sorted, row-major) of cells with m_occ strictly above
    the search threshold."""
    return np.flatnonzero(frame.m_occ.ravel() > cfg.eps_m_occ)


def build_validation_mask(frame: DogmaFrame, mask: np.ndarray,
                          cfg: ExtractionConfig) -> np.ndarray:
    """Subset of mask passing all per-cell validation conditions.

    Cells with a singular velocity covariance never validate: without an
    invertible covariance the motion evidence cannot be judged.
    """
    idx = np.asarray(mask, dtype=np.int64)
    if idx.size == 0:
        return idx
    rows, cols = np.divmod(idx, frame.n_cols)
    m_occ = frame.m_occ[rows, cols]
    m_free = frame.m_free[rows, cols]
    vx = frame.vel_x[rows, cols]
    vy = frame.vel_y[rows, cols]
    a = frame.var_vx[rows, cols]
    b = frame.cov_vxvy[rows, cols]
    c = frame.var_vy[rows, cols]

    p_occ = 0.5 * m_occ + 0.5 * (1.0 - m_free)
    speed = np.hypot(vx, vy)
    det = a * c - b * b
    invertible = det >= COV_DET_FLOOR
    safe_det = np.where(invertible, det, 1.0)
    d0 = np.sqrt(np.maximum(
        (c * vx * vx - 2.0 * b * vx * vy + a * vy * vy) / safe_det, 0.0))

    ok = ((p_occ >= cfg.eps_p_occ)
          & (speed >= cfg.eps_speed)
          & (a <= cfg.eps_var_vx)
          & (c <= cfg.eps_var_vy)
          & invertible
          & (d0 >= cfg.eps_d0))
    return idx[ok]


# ---- stage 2: clustering ----------------------------------------------------


def _neighbor_offsets(cell_size: float, eps_pos: float) -> list:
    """Integer lattice offsets within the position radius, excluding (0, 0)."""
    r_max = int(math.floor(eps_pos / cell_size + 1e-9))
    cs2 = cell_size * cell_size
    eps2 = eps_pos * eps_pos
    return [(di, dj)
            for di in range(-r_max, r_max + 1)
            for dj in range(-r_max, r_max + 1)
            if (di or dj) and cs2 * (di * di + dj * dj) <= eps2]


def cluster_cells(frame: DogmaFrame, mask: np.ndarray,
                  cfg: ExtractionConfig) -> list[CellCluster]:
    """Density clustering of the masked cells.

    Two cells are neighbors when both their lattice distance is within
    eps_pos and their velocity difference is within eps_vel. A cell is a
    core cell when its neighborhood (itself included) holds at least
    min_cluster_cells cells. Clusters are connected components of the
    core-core graph; a non-core cell with at least one core neighbor joins
    the cluster of its lowest-ordinal core neighbor; remaining cells are
    noise. Clusters are ordered by their lowest member index, members
    sorted ascending.
    """
    idx = np.asarray(mask, dtype=np.int64)
    m = idx.size
    if m == 0:
        return []
    rows, cols = np.divmod(idx, frame.n_cols)
    ord_grid = np.full((frame.n_rows, frame.n_cols), -1, dtype=np.int64)
    ord_grid[rows, cols] = np.arange(m)
    vx = frame.vel_x[rows, cols]
    vy = frame.vel_y[rows, cols]
    eps_v2 = cfg.eps_vel * cfg.eps_vel

    offsets = _neighbor_offsets(frame.cell_size, cfg.eps_pos)
    half = [(di, dj) for di, dj in offsets if di > 0 or (di == 0 and dj > 0)]

    src_parts, dst_parts = [], []
    for di, dj in half:
        r2 = rows + di
        c2 = cols + dj
        inside = (r2 >= 0) & (r2 < frame.n_rows) & (c2 >= 0) & (c2 < frame.n_cols)
        if not inside.any():
            continue
        o1 = np.flatnonzero(inside)
        o2 = ord_grid[r2[inside], c2[inside]]
        hit = o2 >= 0
        o1, o2 = o1[hit], o2[hit]
        if o1.size == 0:
            continue
        dvx = vx[o1] - vx[o2]
        dvy = vy[o1] - vy[o2]
        close = dvx * dvx + dvy * dvy <= eps_v2
        src_parts.append(o1[close])
        dst_parts.append(o2[close])

    if src_parts:
        src = np.concatenate(src_parts)
        dst = np.concatenate(dst_parts)
    else:
        src = np.empty(0, dtype=np.int64)
        dst = np.empty(0, dtype=np.int64)

    degree = (np.bincount(src, minlength=m) + np.bincount(dst, minlength=m))
    core = degree + 1 >= cfg.min_cluster_cells

    cc = core[src] & core[dst]
    graph = sparse.coo_matrix(
        (np.ones(int(cc.sum())), (src[cc], dst[cc])), shape=(m, m))
    _, comp = connected_components(graph, directed=False)

    # Border cells: lowest-ordinal core neighbor decides the cluster.
    all_src = np.concatenate([src, dst])
    all_dst = np.concatenate([dst, src])
    is_border_edge = ~core[all_src] & core[all_dst]
    attach_to = np.full(m, m, dtype=np.int64)
    np.minimum.at(attach_to, all_src[is_border_edge], all_dst[is_border_edge])

    members: dict[int, list] = {}
    core_ordinals = np.flatnonzero(core)
    for o in core_ordinals:
        members.setdefault(int(comp[o]), []).append(int(o))
    for o in np.flatnonzero(~core & (attach_to < m)):
        members.setdefault(int(comp[attach_to[o]]), []).append(int(o))

    clusters = []
    for ordinals in members.values():
        ordinals.sort()
        clusters.append(CellCluster(member_indices=idx[np.array(ordinals)]))
    clusters.sort(key=lambda cl: int(cl.member_indices[0]))
    return clusters


# ---- stage 4: cluster validation --------------------------------------------


def validate_clusters(clusters: list[CellCluster], validation_mask: np.ndarray,
                      cfg: ExtractionConfig) -> list[CellCluster]:
    """Keep clusters whose validated-member ratio reaches eps_ratio
    (inclusive). validated_count is filled on the survivors."""
    vmask = np.asarray(validation_mask, dtype=np.int64)
    survivors = []
    for cl in clusters:
        hits = int(np.isin(cl.member_indices, vmask, assume_unique=True).sum())
        if cl.size and hits / cl.size >= cfg.eps_ratio:
            survivors.append(CellCluster(member_indices=cl.member_indices,
                                         validated_count=hits))
    return survivors


# ---- stage 5: object creation ------------------------------------------------


def create_objects(frame: DogmaFrame, clusters: list[CellCluster],
                   cfg: ExtractionConfig) -> list[GridObject]:
    """Turn validated clusters into unlabeled object hypotheses.

    Orientation is the circular mean of the member cells' motion
    directions; clusters whose members all have exactly zero velocity are
    dropped (no direction to aggregate). The bounding box is axis-aligned
    with the mean orientation, spans the member cell centers, and grows by
    half a cell on every side so single cells still have extent.
    """
    objects = []
    for cl in clusters:
        pos = frame.vehicle_positions(cl.member_indices)
        rows, cols = np.divmod(cl.member_indices, frame.n_cols)
        vx = frame.vel_x[rows, cols]
        vy = frame.vel_y[rows, cols]
        speed = np.hypot(vx, vy)
        moving = speed > 0.0
        if not moving.any():
            continue
        ux = (vx[moving] / speed[moving]).sum()
        uy = (vy[moving] / speed[moving]).sum()
        orientation = math.atan2(uy, ux) if (ux != 0.0 or uy != 0.0) else 0.0

        u = np.array([math.cos(orientation), math.sin(orientation)])
        n = np.array([-u[1], u[0]])
        along = pos @ u
        across = pos @ n
        center = (0.5 * (along.max() + along.min()) * u
                  + 0.5 * (across.max() + across.min()) * n)
        length = float(along.max() - along.min()) + frame.cell_size
        width = float(across.max() - across.min()) + frame.cell_size
        box = OrientedBox(center, orientation, length, width)
        ref_label, ref_pos = box.nearest_anchor(np.zeros(2))
        objects.append(GridObject(
            ref_pos=ref_pos,
            ref_label=ref_label,
            speed=float(speed.mean()),
            orientation=orientation,
            bbox=box.corners(),
            timestamp=frame.timestamp,
            cell_count=cl.size,
        ))
    return objects


def assign_labels(current: list[GridObject], previous: list[GridObject],
                  dt: float, cfg: ExtractionConfig,
                  next_label: int) -> tuple[list[GridObject], int]:
    """Carry labels over from the previous frame.

    Previous box centers advance by a constant-velocity prediction; the
    gated minimum-cost assignment on center distances decides inheritance.
    Box centers (not reference points) keep the cost stable when the
    nearest anchor flips as an object passes the ego. Unmatched current
    objects draw fresh labels in frame order; the counter never reuses a
    label.
    """
    if previous and current:
        pred = np.array([
            p.center + p.speed * dt * np.array([math.cos(p.orientation),
                                                math.sin(p.orientation)])
            for p in previous
        ])
        cur = np.array([c.center for c in current])
        diff = pred[:, None, :] - cur[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        result = hungarian_assign(CostMatrix.gated(dist, cfg.cv_gate))
    else:
        result = Assignment(pairs=(), total_cost=0.0)

    for r, c in result.pairs:
        current[c].label = previous[r].label
    for obj in current:
        if obj.label is None:
            obj.label = next_label
            next_label += 1
    return current, next_label


def extract_frame(frame: DogmaFrame, previous: list[GridObject],
                  prev_time: float | None, cfg: ExtractionConfig,
                  next_label: int) -> tuple[list[GridObject], int]:
    """Run all five stages plus label assignment on one frame."""
    cfg.validate()
    mask = build_search_mask(frame, cfg)
    vmask = build_validation_mask(frame, mask, cfg)
    clusters = cluster_cells(frame, mask, cfg)
    survivors = validate_clusters(clusters, vmask, cfg)
    objects = create_objects(frame, survivors, cfg)
    dt = frame.timestamp - prev_time if prev_time is not None else 0.0
    return assign_labels(objects, previous or [], dt, cfg, next_label)


class GridExtractor:
    """Stateful frame-to-frame extractor: keeps the previous objects and a
    monotone label counter."""

    def __init__(self, cfg: ExtractionConfig = ExtractionConfig()):
        cfg.validate()
        self.cfg = cfg
        self._previous: list[GridObject] = []
        self._prev_time: float | None = None
        self._next_label = 1

    def extract(self, frame: DogmaFrame) -> list[GridObject]:
        objects, self._next_label = extract_frame(
            frame, self._previous, self._prev_time, self.cfg, self._next_label)
        self._previous = objects
        self._prev_time = frame.timestamp
        return objects

    def reset(self):
        self._previous = []
        self._prev_time = None
        self._next_label = 1
