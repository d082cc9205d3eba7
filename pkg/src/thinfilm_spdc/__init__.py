"""Photon-pair generation by SPDC in a thin chi2 film on a substrate.

The film (medium 2, e.g. GaAs) lies between air (medium 1, z > 0) and a
substrate (medium 3, z < -a) through which the pump arrives.  Pair amplitudes
use Fourier-domain Green's functions of the three-layer stack, with all
Fabry-Perot reflections and the pump's standing wave inside the film.
"""

from .analysis import (
    Axis,
    ScanGrid,
    ScanSummary,
    coherence_length,
    decay_length,
    fwhm,
    idler_angle,
    idler_scan,
    opd_period,
    phi_symmetric_scan,
    theta_map,
    thickness_period,
    thickness_scan,
)
from .errors import (
    ConfigError,
    IncompleteProfileError,
    MaterialLookupError,
    NoPropagatingIdlerError,
    OracleDivergenceError,
    ReconstructionError,
    ResonancePoleError,
    SpdcError,
    UndefinedStateError,
)
from .materials import ExtrapolationWarning, build_stack, material_lookup, register_dispersion_file
from .optics import LayerStack, Medium, fresnel, kz, polarization_triad
from .pump import PumpSpec
from .spdc import (
    Chi2Tensor,
    DetectorSetting,
    JointSetting,
    amplitude_matrix,
    farfield_rate,
    farfield_tensor,
    jap,
    jap_quadrature,
    make_setting,
    unpolarized_rate,
)
from .tomography import (
    DensityMatrix4,
    TomographyRecord,
    measure,
    projection_rate,
    reconstruct_rho,
    rho_direct,
    schmidt_map,
    schmidt_number,
    tomographic_states,
    wavelength_sweep,
)
