"""Noise-resilient distance-bounding: protocol, adversaries, evaluators,
Monte Carlo engine, and experiment harness."""

from .bits import as_bits, bits_to_str
from .core import (
    RegisterSet,
    SessionConfig,
    Transcript,
    decide_noiseless,
    derive_registers,
    f_q,
    prover_respond,
    run_honest_session,
    verifier_expected,
)
from .noise import NO_NOISE, NoiseModel, apply_noise, decide_noisy, mismatch_vector, switched_rounds
from .protocols import ResponderSpec, memory_bits, parse_protocol_id

__version__ = "0.1.0"

__all__ = [
    "RegisterSet",
    "SessionConfig",
    "Transcript",
    "NoiseModel",
    "NO_NOISE",
    "ResponderSpec",
    "as_bits",
    "bits_to_str",
    "decide_noiseless",
    "decide_noisy",
    "derive_registers",
    "f_q",
    "memory_bits",
    "mismatch_vector",
    "parse_protocol_id",
    "prover_respond",
    "run_honest_session",
    "switched_rounds",
    "verifier_expected",
    "apply_noise",
    "__version__",
]
