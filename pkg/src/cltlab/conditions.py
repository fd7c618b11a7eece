"""Pass/fail/indeterminate reports for CLT hypothesis checkers."""

from __future__ import annotations

from dataclasses import dataclass, field

PASS = "pass"
FAIL = "fail"
INDETERMINATE = "indeterminate"

_VERDICTS = (PASS, FAIL, INDETERMINATE)


@dataclass(frozen=True)
class ConditionEntry:
    """One checked hypothesis with numeric evidence behind the verdict."""

    name: str
    verdict: str
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in _VERDICTS:
            raise ValueError(f"verdict must be one of {_VERDICTS}, got {self.verdict!r}")


@dataclass(frozen=True)
class ConditionReport:
    """A set of uniquely named condition entries."""

    conditions: tuple

    def __post_init__(self):
        names = [c.name for c in self.conditions]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate condition names in {names}")

    def __getitem__(self, name: str) -> ConditionEntry:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def all_pass(self) -> bool:
        return all(c.verdict == PASS for c in self.conditions)

    @property
    def any_fail(self) -> bool:
        return any(c.verdict == FAIL for c in self.conditions)

    def as_dict(self) -> dict:
        return {
            c.name: {"verdict": c.verdict, "evidence": dict(c.evidence)}
            for c in self.conditions
        }


def decay_verdict(magnitudes, tol: float) -> tuple[str, dict]:
    """Classify a non-negative magnitude sequence as summable or not.

    ``pass``: the sequence falls below ``tol`` and stays there (geometric-type
    decay); ``fail``: the tail shows no decay relative to the head while
    staying above ``tol``; ``indeterminate``: still decaying when the budget
    ran out.  Returns the verdict and an evidence dict, including a geometric
    decay-ratio estimate fitted between the peak term and the last term above
    tolerance.
    """
    import numpy as np

    mags = np.asarray(magnitudes, dtype=np.float64)
    n = mags.size
    evidence: dict = {"terms": int(n), "abs_sum": float(mags.sum())}
    if n == 0:
        return INDETERMINATE, evidence
    above = np.flatnonzero(mags >= tol)
    evidence["last_abs"] = float(mags[-1])
    if above.size == 0:
        evidence["ratio"] = 0.0
        return PASS, evidence
    peak = int(np.argmax(mags))
    last = int(above[-1])
    if last > peak and mags[peak] > 0:
        ratio = float((mags[last] / mags[peak]) ** (1.0 / (last - peak)))
    else:
        ratio = 0.0
    evidence["ratio"] = ratio

    # settled below tolerance for the final stretch -> summable
    settle = max(3, n // 10)
    if np.all(mags[-settle:] < tol):
        return PASS, evidence
    head = mags[: max(1, n // 5)].max()
    tail = mags[-max(1, n // 5):].max()
    if tail >= 0.9 * head and tail >= tol:
        return FAIL, evidence
    return INDETERMINATE, evidence
