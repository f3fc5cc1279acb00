"""OSC/TUIO show networking toolkit: codec, tracker, heartbeat detector,
cue engine, simulated devices and a deterministic simulated network."""

from ._stagewire import (
    MAX_PACKET_SIZE,
    DetectorConfig,
    ParseError,
    Router,
    SimNetwork,
    SimPublisher,
    SimSubscription,
    StagewireError,
    Tracker,
    decode_message,
    decode_packet,
    detect,
    encode_message,
    encode_packet,
    estimate_bpm,
    match_address,
    packet_to_string,
    parse_trace,
    run_choreography,
    run_show,
    synth_ppg,
)

__all__ = [
    "MAX_PACKET_SIZE",
    "DetectorConfig",
    "ParseError",
    "Router",
    "SimNetwork",
    "SimPublisher",
    "SimSubscription",
    "StagewireError",
    "Tracker",
    "decode_message",
    "decode_packet",
    "detect",
    "encode_message",
    "encode_packet",
    "estimate_bpm",
    "match_address",
    "packet_to_string",
    "parse_trace",
    "run_choreography",
    "run_show",
    "synth_ppg",
]
