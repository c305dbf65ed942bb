import numpy as np
import pytest

from gridfuse.dogma import DogmaFrame


def make_frame(n_rows=24, n_cols=24, cell_size=0.5, timestamp=0.0,
               ego_pose=None) -> DogmaFrame:
    """Blank frame; paint cells through frame.m_occ[...] etc. afterwards."""
    return DogmaFrame.empty(n_cols * cell_size, n_rows * cell_size,
                            cell_size, timestamp, ego_pose)


def paint(frame: DogmaFrame, row: int, col: int, m_occ=0.9, m_free=0.02,
          vel=(2.0, 0.0), var=(0.04, 0.04), cov=0.0):
    frame.m_occ[row, col] = m_occ
    frame.m_free[row, col] = m_free
    frame.vel_x[row, col] = vel[0]
    frame.vel_y[row, col] = vel[1]
    frame.var_vx[row, col] = var[0]
    frame.var_vy[row, col] = var[1]
    frame.cov_vxvy[row, col] = cov
    return row * frame.n_cols + col


def paint_block(frame: DogmaFrame, row0: int, col0: int, n_rows: int,
                n_cols: int, **kw) -> list:
    """Paint a rectangle of cells; returns their flat indices."""
    return [paint(frame, r, c, **kw)
            for r in range(row0, row0 + n_rows)
            for c in range(col0, col0 + n_cols)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
