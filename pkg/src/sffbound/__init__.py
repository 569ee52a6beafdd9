"""
sffbound: spectral form factors and the return-probability bound P_S(t) >= K(t).

Modules
-------
spectra      spectrum-level quantities (N~(t), K(t), sigma_E, DOS tools)
dynamics     unitary, filtered and Kraus channels; generalized K(t); TFD oracle
projectors   complete projector sets stored as isometries
bounds       P_S(t), the bound and its derivation chain, scrambling diagnostics
syk          SYK-q model construction in the Fock basis
experiment   config-driven runner used by the CLI
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .spectra import (  # noqa: E402
    DosHistogram,
    SpectralDecomposition,
    TimeSeries,
    check_fourier_nonnegativity,
    diagonalize,
    dos_fourier,
    dos_histogram,
    gaussian_smooth_dos,
    mt_envelope,
    sff_from_spectrum,
    sff_plateau,
    spectral_variance,
    spectrum_only,
)
from .dynamics import (  # noqa: E402
    FilteredUnitaryChannel,
    KrausChannel,
    UnitaryChannel,
    evolve_projector,
    generalized_sff,
    tfd_return_probability,
    unitary_at,
    validate_channel,
)
from .projectors import (  # noqa: E402
    ProjectorSet,
    dft_eigenbasis_states,
    haar_random_subsystem_projectors,
    hadamard_eigenbasis_states,
    microcanonical_projectors,
    subsystem_basis_projectors,
    validate_projector_set,
)
from .bounds import (  # noqa: E402
    cross_overlap,
    derivation_chain,
    haar_prediction,
    mean_return_probability,
    per_state_return,
    powerlaw_fit,
    scrambling_check,
    sustained_scrambling_time,
    verify_speed_limit,
)
from .syk import SykModel, build_syk_model, fock_state, majorana_matrices, subsystem_fock_projectors  # noqa: E402
