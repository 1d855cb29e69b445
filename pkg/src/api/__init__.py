from .finite_measures import compose, conditional_theta, log_sum, marginals, prohorov_distance, relative_entropy
from .empirical import densify, enumerate_empirical, find_N_for_ball, joint_empirical_law, nearest_empirical
from .kernels import eta_event, eta_point_mass, eta_via_conditioning, kernel_law, verify_prcp_identity
from .rate import feasible_support, i_projection, inf_over_s_margin, inf_rate_over_set, rate_I, support_feasible
from .rounding import certificate_for, match_s_margin
from .harness import conditional_ball_probability, sanov_convergence, scan_condition_A2, scan_condition_B2
from .gallery import (
    check_mixture_hypotheses,
    counterexample_ratio,
    exponential_mixture_weights,
    find_epsilon_n,
    gaussian_cumulant,
    gaussian_rate,
    mixture_kernel_eval,
)
