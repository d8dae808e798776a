"""Bandlimited targets, interpolating learners and risk bounds."""

from .errors import BandlabError, CapacityError, ConditioningError, InputError
from .indexcalc import (
    count_monomials,
    degree_for_sample_count,
    enumerate_multi_indices,
    log_factorial,
    monomial_eval,
)
from .learners import (
    LearnerSpec,
    PolynomialModel,
    SincKernelModel,
    ZeroModel,
    bernstein_check_model,
    eval_model,
    fit_learner,
    fit_polynomial,
    fit_sinc_interpolant,
    model_from_dict,
    model_to_dict,
)
from .riskbounds import (
    BoundReport,
    RiskEstimate,
    approx_band_bound,
    diagonal_bound,
    difficulty,
    empirical_risk,
    expected_risk_mc,
    hypercube_bound,
    mean_expected_risk,
    model_distance_mc,
    theorem2_bound,
)
from .sampling import (
    Dataset,
    InputDistribution,
    bounded_uniform,
    cell_occupancy,
    diagonal_gaussian,
    draw_inputs,
    isotropic_gaussian,
    make_dataset,
    occupancy_probability,
)
from .targets import (
    CosineMixtureTarget,
    HashNoiseTarget,
    approx_band,
    bernstein_check_target,
    cosine_target,
    eval_target,
    out_of_band_energy,
    per_dim_bands,
    synth_approx,
    synth_nonbandlimited,
    synth_strict,
    target_from_dict,
    target_taylor_coeff,
    target_to_dict,
)

__version__ = "0.1.0"
