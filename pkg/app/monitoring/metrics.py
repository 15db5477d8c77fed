from __future__ import annotations

from prometheus_client import Counter, Histogram


HOMOMORPHIC_OPERATIONS_TOTAL = Counter(
    "rce_homomorphic_operations_total",
    "Total number of homomorphic operations evaluated",
    ["op", "repr"],
)

WORD_OPERATIONS_TOTAL = Counter(
    "rce_word_operations_total",
    "Word-level operations recorded by the instrumented cipher paths",
    ["kind"],
)

FRAMES_TOTAL = Counter(
    "rce_frames_total",
    "Total frames exchanged between adapter and controller",
    ["msg_type", "direction"],
)

FRAME_BYTES_TOTAL = Counter(
    "rce_frame_bytes_total",
    "Total frame payload bytes",
    ["msg_type"],
)

CONTROLLER_STEP_DURATION_SECONDS = Histogram(
    "rce_controller_step_duration_seconds",
    "Wall time of one encrypted controller step in seconds",
    buckets=(0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0),
)

DECRYPTION_NOISE_BITS = Histogram(
    "rce_decryption_noise_bits",
    "log2 of the measured noise of decrypted controller outputs",
    buckets=(4, 8, 16, 24, 32, 40, 48, 56, 62),
)
