"""Numerical laboratory for interacting diffusions on large graphs and
their mean-field Fokker-Planck limits."""

from .fokker_planck import (
    DensityTrajectory,
    FourierDensity,
    LinearizedPath,
    StationaryProfile,
    UnsupportedKernelError,
    evolve_density,
    linear_rates,
    predicted_r_squared,
    simulate_linearized,
    solve_r_fixed_point,
    stationary_profile,
    synchrony_map,
)
from .graphs import (
    DegreeReport,
    Graph,
    binomial_tail,
    degree_stats,
    gen_complete,
    gen_erdos_renyi,
    gen_random_regular,
    gen_two_clique,
    kl_bernoulli,
    load_graph,
    save_graph,
)
from .metrics import (
    BoundCurve,
    EmpiricalMeasure,
    UtCurve,
    bl_distance_estimate,
    bound_curve,
    coupling_error,
    kuiper_uniformity,
    order_parameter,
)
from .models import (
    DisorderLaw,
    DriftForm,
    KernelForm,
    ModelConstants,
    ModelSpec,
    make_active_rotator,
    make_generalized_kuramoto,
    make_kuramoto,
    model_constants,
)
from .sde import (
    CoupledTrajectory,
    EnsembleState,
    PhaseLaw,
    SimConfig,
    Trajectory,
    sample_initial,
    simulate,
    simulate_coupled,
)

__version__ = "0.1.0"
