"""Second-order Stark shifts in the one-dimensional Dirac bag."""

from .dalgarno_lewis import (
    DLConsistencyError,
    DLCorrection,
    dl_correction,
    dl_residual,
    dl_shift,
    dl_total,
    nonrel_shift,
)
from .matrix_elements import Perturbation, dipole_element, dipole_element_massless
from .perturbation import (
    PairingScheme,
    RearrangementTrace,
    ShiftReport,
    Truncation,
    cross_term_pairs,
    method_I_total,
    method_II_total,
    polarizability,
    rearrangement_demo,
    shift_level_free,
    shift_level_pauli,
)
from .spectrum import (
    BagModel,
    Level,
    Parity,
    Sign,
    Spinor,
    enumerate_levels,
    massless_level,
    mirror,
    solve_level,
    wavefunction,
)

__version__ = "0.1.0"
