"""Bursty sampling gate.

Monitoring alternates between an enabled window and a (larger) disabled
window, measured in per-thread instruction indices and anchored at index 0
so runs are reproducible. Loads falling outside an enabled window update
nothing: no shadow writes, no counters.
"""

from dataclasses import dataclass

from .errors import ConfigError

DEFAULT_WINDOW_ENABLE = 1_000_000
DEFAULT_WINDOW_DISABLE = 99_000_000


@dataclass(frozen=True)
class SamplingConfig:
    window_enable: int = DEFAULT_WINDOW_ENABLE
    window_disable: int = DEFAULT_WINDOW_DISABLE
    enabled: bool = True

    def __post_init__(self):
        if self.enabled and self.window_enable < 1:
            raise ConfigError("window_enable must be >= 1")
        if self.window_disable < 0:
            raise ConfigError("window_disable must be >= 0")

    @classmethod
    def disabled(cls):
        return cls(enabled=False)


def is_monitored(ins_index, config):
    if not config.enabled:
        return True
    period = config.window_enable + config.window_disable
    return ins_index % period < config.window_enable
