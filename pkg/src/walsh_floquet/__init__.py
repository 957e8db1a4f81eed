"""Floquet quasienergy solvers in Fourier, discrete Fourier and Walsh bases."""

from __future__ import annotations

from .lattice import (
    BASES,
    ExtendedOperator,
    PeriodicDrive,
    TranslationGenerator,
    assemble_q,
    drive_matrix,
    fourier_coefficients,
    generator_in_basis,
    interval_values,
    load_extended_operator,
    square_wave,
    symmetrize_walsh,
    translation_generator,
    updown_kick,
    zero_drive,
)
from .models import SpinModel, build_mfim, kick_unitary, two_level
from .solve import (
    ExactFloquetResult,
    FloquetSolution,
    PhaseError,
    exact_propagator,
    participation_entropy,
    phase_error,
    solve,
)
from .walsh import (
    AliasWarning,
    FourierModeSet,
    ResourceLimitError,
    WalshBasis,
    alias_fold,
    build_walsh_basis,
    dft_coefficients,
    inverse_wht,
    natural_of,
    sequency_of,
    wht,
)

__version__ = "0.1.0"
