"""HSPA+/LTE parallel turbo decoder simulator.

Subpackages cover the codec (encoder, AWGN channel, quantizer), the
fixed-point max-log-MAP SISO core, on-the-fly interleaver address
generation for both standards, the cycle-accurate memory conflict
model, the double-buffer write-conflict resolver, and the decoding
pipeline with its BER harness.
"""

from .codec import ChannelLlrBlock, CodeBlock, EncodedBlock, awgn_modulate, encode
from .dbcf import BufferOverflowError, DbcfConfig, DbcfStats, run_dbcf
from .iag import AddressLanes, HspaContext, QppContext, hspa_preprocess, make_context, qpp_params
from .memsys import ConflictStats, MemoryMap, simulate_traffic
from .pipeline import DecodeReport, DecoderConfig, ber_curve, compare_schedules, decode

__all__ = [
    "AddressLanes",
    "BufferOverflowError",
    "ChannelLlrBlock",
    "CodeBlock",
    "ConflictStats",
    "DbcfConfig",
    "DbcfStats",
    "DecodeReport",
    "DecoderConfig",
    "EncodedBlock",
    "HspaContext",
    "MemoryMap",
    "QppContext",
    "awgn_modulate",
    "ber_curve",
    "compare_schedules",
    "decode",
    "encode",
    "hspa_preprocess",
    "make_context",
    "qpp_params",
    "run_dbcf",
    "simulate_traffic",
]

__version__ = "0.1.0"
