"""Fault-tolerant NMPC simulator for a legged quadrotor."""

from ._core import (
    ConfigError,
    RunConfig,
    channels,
    hover_state,
    hover_thrust,
    load_config,
    parse_config,
    rom_dynamics,
    run,
    selftest,
)

__all__ = [
    "ConfigError",
    "RunConfig",
    "channels",
    "hover_state",
    "hover_thrust",
    "load_config",
    "parse_config",
    "rom_dynamics",
    "run",
    "selftest",
]
