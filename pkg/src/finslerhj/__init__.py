"""Hamilton-Jacobi solvers and theorem-backed verification on Finsler grid domains."""

__version__ = "0.1.0"

from .errors import (BudgetError, CoercivityError, ConvergenceError,
                     DomainError, FinslerError, GeometryError, InputError,
                     MetricError, ProbeError, SchemaError)
from .grid import GridDomain, stencil_offsets
from .norms import (Covector, CustomNorm, EuclideanNorm, NormField,
                    PiecewisePath, RiemannianNorm, ScaledNorm, WeightedPNorm,
                    eval_dual_norm, eval_norm, palais_ratio, path_length)
from .distance import (DistanceField, STENCIL_ANISOTROPY, distance_field,
                       graph_distance_matrix, metric_ball)
