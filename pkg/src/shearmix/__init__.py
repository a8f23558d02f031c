"""Random alternating Hamiltonian shear flows on the two-torus.

Exact composed-shear simulation, Lie bracket rank certificates, Lyapunov
exponent estimation, drift-condition checks, controllability plans, and
passive-scalar mixing diagnostics, with a CLI that writes deterministic
CSV/JSON artifacts.
"""

__version__ = "0.1.0"

from .chains import (build_invariant_set, dist_to_invariant, projective_step,
                     two_point_step)
from .ergodicity import (DriftSpec, TwoPointDriftSpec, correlation_series,
                         drift_bound, drift_scan, empirical_drift_ratio,
                         empirical_two_point_drift, eval_V, eval_V2,
                         find_min_T, two_point_drift_sweep)
from .errors import ConfigError, NumericsError
from .flow import (Schedule, inverse_step, run_schedule, sample_schedule,
                   step, step_positions, torus_dist)
from .lie import (bracket, check_hypothesis, projective_det3,
                  rank_certificate)
from .lyapunov import estimate_lambda1, estimate_lambda_sum
from .mixing import advect, default_radii, grad_norm_l1, mix_run, mixing_scale
from .profiles import (CircleIdentity, ShearModel, TrigPoly, check_h1,
                       chirikov, distortion_constant, fixed_points,
                       pierrehumbert, sine_profile, symmetry_data, zero_set)
from .steering import chain_distance, numeric_steer, split_schedule, steer_to
