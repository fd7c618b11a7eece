"""Built-in experiment presets.

Each preset is stored as literal config text in the same format ``run``
accepts from disk, so the presets double as working examples of the schema
and are guaranteed to round-trip through the parser.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    config_text: str


_BERNOULLI_TEXT = """\
# fair coin, +/-1 observable
[system]
matrix = 0.5, 0.5
matrix = 0.5, 0.5
sidedness = one_sided

[observable]
offset = 0
length = 1
values = 1, -1

[run]
kind = all
n_grid = 100, 1000, 10000
samples = 4000
seed = 42
"""

_PRESETS = (
    Preset(
        name="bernoulli-rademacher",
        description=(
            "Fair coin with the +/-1 observable: sigma2 = 1, and both the "
            "backward and forward martingale CLT theorems hold with "
            "one-term series."
        ),
        config_text=_BERNOULLI_TEXT,
    ),
    Preset(
        name="two-state-gap",
        description=(
            "Two-state chain [[0.9, 0.1], [0.2, 0.8]] with spectral gap 0.3 "
            "and the centered indicator of state 0: the backward martingale "
            "CLT theorem with geometric decay, sigma2 = 34/27."
        ),
        config_text="""\
# two-state chain with second eigenvalue 0.7
[system]
matrix = 0.9, 0.1
matrix = 0.2, 0.8
sidedness = one_sided

[observable]
offset = 0
length = 1
values = 0.3333333333333333, -0.6666666666666666

[run]
kind = all
n_grid = 100, 1000, 10000
samples = 4000
seed = 42
""",
    ),
    Preset(
        name="coboundary",
        description=(
            "r - Ur on the fair coin: the degenerate branch of the backward "
            "CLT theorem, sigma2 = 0, bounded Birkhoff sums, and a "
            "recoverable coboundary witness."
        ),
        config_text="""\
# coboundary observable r - Ur; Birkhoff sums telescope
[system]
matrix = 0.5, 0.5
matrix = 0.5, 0.5
sidedness = one_sided

[observable]
offset = 0
length = 2
values = 0, 2, -2, 0

[run]
kind = all
n_grid = 100, 1000, 10000
samples = 4000
seed = 42
""",
    ),
    Preset(
        name="period2-indicator",
        description=(
            "Deterministic two-cycle with a centered indicator: negative "
            "control whose alternating correlations violate the summability "
            "hypotheses of both CLT theorems."
        ),
        config_text="""\
# period-2 chain; autocovariances alternate and never decay
[system]
matrix = 0, 1
matrix = 1, 0
sidedness = one_sided

[observable]
offset = 0
length = 1
values = 0.5, -0.5

[run]
kind = conditions
n_grid = 100, 1000, 10000
samples = 4000
seed = 42
""",
    ),
    Preset(
        name="doubling-map-note",
        description=(
            "Alias of bernoulli-rademacher: the binary digits of the "
            "doubling map x -> 2x mod 1 form a fair coin, so the same "
            "backward CLT theorem applies unchanged."
        ),
        config_text=_BERNOULLI_TEXT,
    ),
)

PRESETS = {p.name: p for p in _PRESETS}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r}; known presets: {known}") from None


def describe_presets() -> str:
    """One line per preset, name then description."""
    width = max(len(name) for name in PRESETS)
    lines = [f"{p.name.ljust(width)}  {p.description}" for p in _PRESETS]
    return "\n".join(lines)
