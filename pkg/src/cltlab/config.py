"""Flat sectioned key = value experiment configs.

The format is deliberately tiny: three sections, one ``key = value`` pair
per line, comma-separated lists for rows and grids, ``#`` comments, and a
repeated ``matrix`` key carrying one matrix row per line.

::

    [system]
    matrix = 0.9, 0.1
    matrix = 0.2, 0.8
    sidedness = one_sided          # optional, default one_sided

    [observable]
    offset = 0                     # or: preset = two-state-gap
    length = 1
    values = 0.3333333333333333, -0.6666666666666666

    [run]
    kind = all                     # gordin | forward | clt | conditions | all
    n_grid = 100, 1000, 10000      # optional, strictly increasing
    samples = 4000                 # optional; >= 500 when the clt runs
    seed = 42                      # optional
    workers = 2                    # optional; wall time only
    eps = 0.1                      # optional remainder threshold
    lambda_grid = 2, 1.5, 1.001    # optional, all > 1

Every violation raises ConfigError with the offending line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backward import DEFAULT_LAMBDA_GRID
from .cylinder import CylinderFunction
from .errors import CltLabError, ConfigError

KINDS = ("gordin", "forward", "clt", "conditions", "all")

_SECTIONS = ("system", "observable", "run")
_SYSTEM_KEYS = {"matrix", "sidedness"}
_OBSERVABLE_KEYS = {"preset", "offset", "length", "values"}
_RUN_KEYS = {"kind", "n_grid", "samples", "seed", "workers", "eps", "lambda_grid"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed and validated experiment description."""

    matrix: np.ndarray
    sidedness: str
    observable: CylinderFunction
    kind: str
    n_grid: tuple
    samples: int
    seed: int
    workers: int | None
    eps: float
    lambda_grid: tuple

    def as_dict(self) -> dict:
        return {
            "matrix": [[float(x) for x in row] for row in self.matrix],
            "sidedness": self.sidedness,
            "observable": {
                "offset": self.observable.offset,
                "length": self.observable.length,
                "values": [float(v) for v in self.observable.values],
            },
            "kind": self.kind,
            "n_grid": list(self.n_grid),
            "samples": self.samples,
            "seed": self.seed,
            "eps": self.eps,
            "lambda_grid": list(self.lambda_grid),
        }


def _split_sections(text: str) -> dict:
    sections = {name: [] for name in _SECTIONS}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in sections:
                raise ConfigError(f"line {lineno}: unknown section [{name}]")
            current = name
            continue
        if current is None:
            raise ConfigError(f"line {lineno}: key before any [section] header")
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        sections[current].append((key.strip(), value.strip(), lineno))
    return sections


def _check_keys(pairs, allowed, section):
    seen = set()
    for key, _, lineno in pairs:
        if key not in allowed:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if key != "matrix" and key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{section}]")
        seen.add(key)


def _scalar(pairs, key, default=None):
    for k, value, lineno in pairs:
        if k == key:
            return value, lineno
    return default, None


def _parse_reals(value, lineno, key):
    try:
        return [float(tok) for tok in value.split(",")]
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} must be comma-separated reals, got {value!r}") from None


def _parse_int(value, lineno, key):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} must be an integer, got {value!r}") from None


def _parse_matrix(pairs):
    rows = [(value, lineno) for key, value, lineno in pairs if key == "matrix"]
    if not rows:
        raise ConfigError("[system] needs at least one matrix row")
    parsed = [_parse_reals(value, lineno, "matrix") for value, lineno in rows]
    width = len(parsed[0])
    for (row, (_, lineno)) in zip(parsed, rows):
        if len(row) != width:
            raise ConfigError(f"line {lineno}: matrix row has {len(row)} entries, expected {width}")
    if len(parsed) != width:
        raise ConfigError(f"matrix must be square, got {len(parsed)} rows of width {width}")
    matrix = np.asarray(parsed, dtype=np.float64)
    matrix.setflags(write=False)
    return matrix


def _parse_observable(pairs, alphabet_size):
    preset_name, lineno = _scalar(pairs, "preset")
    inline_keys = [k for k, _, _ in pairs if k != "preset"]
    if preset_name is not None:
        if inline_keys:
            raise ConfigError(
                f"line {lineno}: [observable] takes either preset or offset/length/values, not both"
            )
        from .presets import get_preset

        borrowed = parse_config(get_preset(preset_name).config_text).observable
        if borrowed.alphabet_size != alphabet_size:
            raise ConfigError(
                f"preset {preset_name!r} observable is over {borrowed.alphabet_size} symbols, "
                f"the matrix has {alphabet_size}"
            )
        return borrowed

    offset_text, off_line = _scalar(pairs, "offset", "0")
    length_text, len_line = _scalar(pairs, "length")
    values_text, val_line = _scalar(pairs, "values")
    if length_text is None or values_text is None:
        raise ConfigError("[observable] needs length and values (or a preset name)")
    offset = _parse_int(offset_text, off_line, "offset")
    length = _parse_int(length_text, len_line, "length")
    if length < 0:
        raise ConfigError(f"line {len_line}: length must be non-negative")
    values = _parse_reals(values_text, val_line, "values")
    try:
        return CylinderFunction(offset, length, np.asarray(values), alphabet_size)
    except CltLabError as exc:
        raise ConfigError(f"line {val_line}: {exc}") from None


def parse_config(text: str) -> ExperimentConfig:
    sections = _split_sections(text)
    _check_keys(sections["system"], _SYSTEM_KEYS, "system")
    _check_keys(sections["observable"], _OBSERVABLE_KEYS, "observable")
    _check_keys(sections["run"], _RUN_KEYS, "run")

    matrix = _parse_matrix(sections["system"])
    sidedness, side_line = _scalar(sections["system"], "sidedness", "one_sided")
    if sidedness not in ("one_sided", "two_sided"):
        raise ConfigError(f"line {side_line}: sidedness must be one_sided or two_sided")

    observable = _parse_observable(sections["observable"], matrix.shape[0])

    kind, kind_line = _scalar(sections["run"], "kind")
    if kind is None:
        raise ConfigError("[run] needs kind = gordin | forward | clt | conditions | all")
    if kind not in KINDS:
        raise ConfigError(f"line {kind_line}: kind must be one of {', '.join(KINDS)}")

    grid_text, grid_line = _scalar(sections["run"], "n_grid", "10000")
    n_grid = tuple(
        _parse_int(tok.strip(), grid_line, "n_grid") for tok in grid_text.split(",")
    )
    if any(n < 1 for n in n_grid):
        raise ConfigError(f"line {grid_line}: n_grid entries must be positive")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigError(f"line {grid_line}: n_grid must be strictly increasing")

    samples_text, samples_line = _scalar(sections["run"], "samples", "4000")
    samples = _parse_int(samples_text, samples_line, "samples")
    if samples < 1:
        raise ConfigError(f"line {samples_line}: samples must be positive")
    if kind in ("clt", "all") and samples < 500:
        raise ConfigError(
            f"line {samples_line}: the clt run needs samples >= 500 for the KS threshold"
        )

    seed_text, seed_line = _scalar(sections["run"], "seed", "42")
    seed = _parse_int(seed_text, seed_line, "seed")
    if seed < 0:
        raise ConfigError(f"line {seed_line}: seed must be non-negative")

    workers_text, workers_line = _scalar(sections["run"], "workers")
    workers = None
    if workers_text is not None:
        workers = _parse_int(workers_text, workers_line, "workers")
        if workers < 1:
            raise ConfigError(f"line {workers_line}: workers must be >= 1")

    eps_text, eps_line = _scalar(sections["run"], "eps", "0.1")
    try:
        eps = float(eps_text)
    except ValueError:
        raise ConfigError(f"line {eps_line}: eps must be a real number") from None
    if eps <= 0:
        raise ConfigError(f"line {eps_line}: eps must be positive")

    lam_text, lam_line = _scalar(sections["run"], "lambda_grid")
    if lam_text is None:
        lambda_grid = tuple(DEFAULT_LAMBDA_GRID)
    else:
        lambda_grid = tuple(_parse_reals(lam_text, lam_line, "lambda_grid"))
        if any(lam <= 1.0 for lam in lambda_grid):
            raise ConfigError(f"line {lam_line}: lambda_grid entries must be > 1")

    return ExperimentConfig(
        matrix=matrix,
        sidedness=sidedness,
        observable=observable,
        kind=kind,
        n_grid=n_grid,
        samples=samples,
        seed=seed,
        workers=workers,
        eps=eps,
        lambda_grid=lambda_grid,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
