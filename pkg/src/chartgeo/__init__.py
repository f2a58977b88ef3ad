"""Chart-based Riemannian geometry on R^d and the round 2-sphere."""

from .charts import (NORTH, SOUTH, Atlas, ChartPoint, TangentSample, chart_point_from_ambient,
                     chart_points_for_pair, euclidean_atlas, push_velocity, sphere_atlas,
                     transition, transition_jacobian)
from .errors import GeometryError, NoConvergence
from .functionals import (AnalyticCurve, DiscreteCurve, angle, energy, length,
                          reparametrize_unit_speed, sample, speed)
from .geodesic import (ChartSwitchPolicy, ShootConfig, exp_map, integrate, residual, shoot,
                       shoot_ambient)
from .metric import (MetricField, christoffel_at, christoffel_asymmetric, euclidean_metric,
                     inner, metric_at, pullback_metric, sphere_metric)
from .variation import (BumpPerturbation, euler_lagrange_residual, first_variation,
                        fundamental_lemma_probe)

__version__ = "0.1.0"
