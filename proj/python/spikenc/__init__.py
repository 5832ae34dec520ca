"""Spike encoders, decoders, metrics and a CUBA LIF classifier."""

from ._spikenc import (
    CubaNetwork,
    EncodingConfig,
    SpikeTensor,
    SpikencError,
    __version__,
    afr,
    decode,
    encode,
    inject_noise,
    interpolate_linear,
    map_value_to_rate,
    rate_ppf,
    read_spikes,
    snr_db,
    synth_dataset,
    train,
    write_spikes,
)

SCHEMES = (
    "rate-uniform",
    "rate-normal",
    "rate-beta",
    "ttfs-linear",
    "ttfs-log",
    "binary",
    "delta",
)
