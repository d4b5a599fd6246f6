"""Pulsed dissipative qubit channel simulation and fluctuation-theorem checks.

The package builds the N-pulse channel of an optically pumped two-level
system, extracts its Kraus and time-reversed representations, computes
end-point and two-point measurement energy statistics, verifies the
coherence-affected entropy-production fluctuation theorems, and fits the
channel parameters to measured probability curves.
"""

__version__ = "1.0.0"

from . import channel, dataio, linops, montecarlo, thermo
from .channel import (
    FixedPoint,
    KrausSet,
    PulseParams,
    apply_channel,
    choi_matrix,
    cycle_superoperator,
    fixed_point,
    kraus_from_choi,
    n_pulse_superoperator,
    time_reversed_channel,
)
from .dataio import (
    ExperimentConfig,
    FitResult,
    MeasurementTable,
    MixedCurve,
    fit_parameters,
    mix_measured,
    read_config,
    read_measurements,
    write_config,
    write_measurements,
)
from .errors import (
    DivergentEntropyTerm,
    DivergentRatio,
    DomainError,
    EpmError,
    IncompleteData,
    InfiniteBeta,
    NonPhysicalCoherenceRatio,
    NonUniqueFixedPoint,
    NotAFixedPoint,
    NotCompletelyPositive,
    NotTracePreserving,
    ParseError,
    SingularFixedPoint,
)
from .montecarlo import EmpiricalEstimate, EmpiricalLedger, ShotConfig, empirical_ledger, sample_marginal
from .thermo import (
    EntropyLedger,
    EpmDistribution,
    TpmDistribution,
    decompose_state,
    entropy_terms,
    epm_characteristic_identity,
    epm_distribution,
    experimental_initial_state,
    heat_split,
    jensen_bounds,
    thermal_state,
    tpm_distribution,
)
