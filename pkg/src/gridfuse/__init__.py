"""gridfuse: grid-based environment model.

Extracts object hypotheses from dynamic occupancy grid frames, fuses them
with externally tracked objects under a multiplicative confidence
validation against motion physics, module self-assessment and a digital
map, and ships a scenario simulator, an HTTP service, and a CLI around the
core.
"""

__version__ = "0.1.0"

from .assignment import Assignment, CostMatrix, hungarian_assign
from .config import (ConfigError, apply_overrides, default_configs,
                     defaults_snapshot, load_packaged_defaults,
                     parse_override)
from .dogma import CellState, DogmaFrame, cell_orientation, cell_speed, \
    occupancy_probability, zero_velocity_mahalanobis
from .digital_map import (Building, DigitalMap, Lane, LaneRectangle,
                          MapBuildConfig, approximate_lane,
                          associate_rectangle, load_map, map_from_dict,
                          map_to_ego, point_in_building)
from .ego import (DynKalmanState, EgoState, FrameAnchor, GlobalEgoState,
                  ImuSample, KfNoise, ctra_predict, kf_predict_update)
from .extraction import (CellCluster, ExtractionConfig, GridExtractor,
                         GridObject, assign_labels, build_search_mask,
                         build_validation_mask, cluster_cells, create_objects,
                         extract_frame, validate_clusters)
from .fusion import (ConfidenceRecord, FusionConfig, FusionEngine,
                     MetaObject, SampleEnvelope, TrackState,
                     combined_confidence, map_confidence, module_confidence,
                     physical_confidence)
from .pipeline import RunConfig, RunResult, run_scenario
from .scenario import (GroundTruthObject, ScenarioSpec, StaticObstacle,
                       TrajectorySegment, canned_scenario,
                       render_dogma_frame, render_track_envelope,
                       scenario_names)

__all__ = [name for name in dir() if not name.startswith("_")]
