"""Joint radar-communication design and simulation toolkit."""

from . import array, bounds, codebook, linkbudget, optimizer, scenario, simulator, waveform
from ._validation import SPEED_OF_LIGHT, InternalError, InvalidArgument
from .array import ArrayGeometry, BeamformerBank, DirectionOfArrival, EigenBeamformer, design_beamformer
from .bounds import CrbReport, crb_block, crb_report
from .codebook import Codebook, SphericalCodebook
from .linkbudget import RateBound, SuppressionParams, forward_rate, reverse_rate
from .optimizer import CovConfig, CovWaveformOptimizer, optimize
from .scenario import Scenario, Target, synthesize_rx
from .simulator import ReceiverConfig, Receiver, monte_carlo, run_frame
from .waveform import FmcwCarrier, PulseEnvelope, make_envelope

__version__ = "0.1.0"

__all__ = [
    "array", "bounds", "codebook", "linkbudget", "optimizer", "scenario", "simulator", "waveform",
    "SPEED_OF_LIGHT", "InvalidArgument", "InternalError",
    "ArrayGeometry", "BeamformerBank", "DirectionOfArrival", "EigenBeamformer", "design_beamformer",
    "CrbReport", "crb_block", "crb_report", "Codebook", "SphericalCodebook",
    "RateBound", "SuppressionParams", "forward_rate", "reverse_rate",
    "CovConfig", "CovWaveformOptimizer", "optimize", "Scenario", "Target", "synthesize_rx",
    "ReceiverConfig", "Receiver", "monte_carlo", "run_frame",
    "FmcwCarrier", "PulseEnvelope", "make_envelope",
]
