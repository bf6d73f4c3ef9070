from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    witness: list | None = None
    detail: str = ""
    heuristic: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "witness": self.witness,
                "detail": self.detail, "heuristic": self.heuristic}


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of one validator: a list of named checks plus the sampling setup."""

    kind: str
    checks: list
    samples: int | None = None
    seed: int | None = None
    grid: dict | None = None
    subject: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "passed": self.passed,
             "checks": [c.to_dict() for c in self.checks]}
        if self.samples is not None:
            d["samples"] = self.samples
        if self.seed is not None:
            d["seed"] = self.seed
        if self.grid is not None:
            d["grid"] = self.grid
        if self.subject is not None:
            d["subject"] = self.subject
        d.update(self.extra)
        return d
