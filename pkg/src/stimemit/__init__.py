"""Fock-state simulation of stimulated emission and multi-photon interference."""

from .detection import (
    CoincidencePattern,
    DetectorFanout,
    click_probability_given_photons,
    coincidence_probability,
    herald_branches,
    herald_single_photon,
)
from .experiment import (
    AmplifierScanConfig,
    BeamSplitterScanConfig,
    EnhancementReport,
    ScanResult,
    report_enhancement,
    run_amplifier_scan,
    run_beamsplitter_scan,
)
from .fitting import FitResult, ScanPoint, fit_gaussian_peak, gaussian_peak, peak_to_wing
from .fock import (
    FockError,
    ModeRegistry,
    QuantumState,
    annihilate,
    coherent_state_truncated,
    create,
    inner_product,
    scale_and_add,
    tensor,
)
from .optics import (
    AmplifierSpec,
    BeamSplitterSpec,
    apply_amplifier,
    apply_beam_splitter,
    bunching_probability,
    ideal_enhancement,
    mean_gain_photon_number,
)
from .overlap import (
    ModePair,
    OverlapModel,
    inject_coherent_partial,
    inject_fock_partial,
    overlap_amplitude,
)

__version__ = "0.1.0"
