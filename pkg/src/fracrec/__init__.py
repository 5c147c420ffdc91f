"""Desk-scale recovery of a potential in the fractional Schrodinger equation
from a single exterior measurement, with the regularized unique-continuation
solvers and stability experiments that surround it."""

from .grid import (
    FractionalOrder,
    GridFunction,
    IndexSets,
    SimulationBox,
    SobolevMachinery,
    build_box,
    build_index_sets,
    build_sobolev,
    fraclap_apply,
    fraclap_quadrature_oracle,
    hminus_s_inner,
    hminus_s_norm,
    hs_inner,
    hs_norm,
    l2_norm,
    smooth_bump,
)
from .forward import (
    EigenvalueConditionError,
    ForwardSolution,
    Potential,
    bq_eval,
    check_dirichlet_uniqueness,
    dtn_apply,
    solve_dirichlet,
)
from .ucp import (
    MinimalL2Result,
    OptimizerNonConvergence,
    RegularizerConfig,
    UcpOperator,
    UcpSvd,
    assemble_ucp,
    default_alpha_schedule,
    minimal_l2_reconstruct,
    runge_approximate,
    spectral_reconstruct,
    tikhonov_reconstruct,
    ucp_adjoint,
    ucp_svd,
)
from .reconstruct import (
    MeasurementRecord,
    PipelineError,
    ReconstructionReport,
    full_pipeline,
    infill_nearest,
    measurement_to_h,
    quotient_q,
    recover_interior,
    synthetic_measurement,
)
from .experiments import (
    InstabilitySeries,
    StabilitySweep,
    dirichlet_eigenfunctions,
    instability_series,
    make_instability_geometry,
    spectrum_report,
    stability_sweep,
)

__version__ = "0.1.0"
