# Copyright 2026 The voxtrig Authors
# License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
"""Sound-element backdoor triggers and poisoned-dataset tooling for speech commands."""

from ._voxtrig import (
    SAMPLER_ID,
    VoxtrigError,
    __version__,
    apply_pbsm,
    apply_pitch_only,
    build_attack_testset,
    build_poisoned_dataset,
    convert_voice,
    dominant_frequency,
    evaluate,
    greedy_select,
    load_wav,
    locate_max_energy,
    pitch_shift,
    plan_digest,
    poison_label,
    save_wav,
    semitone_factor,
    snr_db,
    subset_size,
)

__all__ = [
    "SAMPLER_ID",
    "VoxtrigError",
    "__version__",
    "apply_pbsm",
    "apply_pitch_only",
    "build_attack_testset",
    "build_poisoned_dataset",
    "convert_voice",
    "dominant_frequency",
    "evaluate",
    "greedy_select",
    "load_wav",
    "locate_max_energy",
    "pitch_shift",
    "plan_digest",
    "poison_label",
    "save_wav",
    "semitone_factor",
    "snr_db",
    "subset_size",
]
