"""Spectral energy minimization for phase-field-crystal models.

Periodic crystals and projection-method quasicrystals share one toolkit:
Fourier coefficient fields on integer mode grids, an energy split into a
diagonal interaction part and a collocation bulk part, proximal and
semi-implicit steps, and accelerated proximal-gradient solvers with
adaptive restarts and Barzilai-Borwein line search.
"""

from .spectral import (
    GridShape,
    LatticeSpec,
    SpectralField,
    WavevectorTable,
    LatticeError,
    SymmetryError,
    build_wavevectors,
    to_physical,
    to_spectral,
    symmetrize,
    hermitian_defect,
    mode_index,
    embed_in_grid,
    sample_window,
    dot,
    norm,
)
from .models import (
    LandauBrazovskii,
    LifshitzPetrich,
    ModelSpec,
    EnergyBreakdown,
    DiscreteEnergy,
    NumericError,
    build_lambda,
)
from .gradflow import (
    FlowOperator,
    gprox_quadratic,
    explicit_step,
    semi_implicit_step,
    stabilized_step,
)
from .optim import (
    SolverConfig,
    TraceRecord,
    OptimizerState,
    StepResult,
    LineSearchFailure,
    DivergenceError,
    DiagonalQuadratic,
    momentum_update,
    bb_step,
    estimate_step,
    sis_solve,
    apg_solve,
    adaptive_apg_solve,
)
from .phases import (
    ModeSeed,
    SnapshotError,
    double_gyroid_seeds,
    dodecagonal_seeds,
    init_from_modes,
    init_from_modes_file,
    init_preset,
    random_field,
    save_field,
    load_field,
    load_initial,
    lattices_match,
)
from .config import (
    ConfigError,
    RunConfig,
    InitSpec,
    OutputSpec,
    SolverSettings,
    PRESET_NAMES,
    preset_config,
    parse_run_config,
    resolve_config,
)

__version__ = "0.1.0"
