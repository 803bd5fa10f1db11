"""Convex-hull vehicle pose estimation with a minimum-occlusion-area criterion."""
from .errors import (DegenerateCluster, DegeneratePolygon, EmptyInput, EmptyScan,
                     EstimationFailed, FormatError, NoVisibleEdge, OriginInsideHull)
from .geometry import Hull, LineNF, Vec2, convex_hull, line_intersection, polygon_area, signed_distance
from .pose import (Box3D, Cluster2D, FitResult, OrientedRectFrame, VisibleWedge, assemble_box3d,
                   boundary_points, estimate_pose, is_visible, occlusion_area, project_to_plane,
                   rect_from_theta, select_projection_edge, theta_grid)

__version__ = "0.1.0"
