"""Fillings of finite antipodal spaces and the maps between them."""
from .errors import GeometryError
from .semimetric import (
    AntipodalSpace,
    FiniteSemiMetric,
    cross_ratio,
    gmvt_apply,
    gmvt_derivative,
    validate_antipodal,
    validate_semimetric,
)
from .moebius import MoebiusPoint, TauVector, antipodalize, discrepancy, moebius_metric
from .rough import PointMap, ai_distance, gh_ball_distance, invert_rough_isometry
from .filling import filling_convergence_experiment, filling_map, partition_of_unity
from .boundary import boundary_convergence_experiment, components, sphere_sample
from .gallery import circle_boundary, perturb_antipodal, random_antipodal, tree_boundary

__version__ = "0.1.0"
