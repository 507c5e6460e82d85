"""Verdicts with serializable witnesses."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

SCHEMA = "quasilab/1"
ANSWERS = ("yes", "no", "unknown", "error")


@dataclass
class Report:
    question: str
    answer: str
    witness: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    assumptions: list = field(default_factory=list)
    budget: str | None = None
    notes: list = field(default_factory=list)
    timing: float = 0.0
    # replays the witness with independent checks; not serialized
    verifier: Callable[[], bool] | None = field(default=None, repr=False, compare=False)
    # python-side payload (homomorphisms, terms...); not serialized
    data: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.answer not in ANSWERS:
            raise ValueError(f"bad answer {self.answer!r}")

    @property
    def yes(self) -> bool:
        return self.answer == "yes"

    @property
    def no(self) -> bool:
        return self.answer == "no"

    def verify(self) -> bool:
        if self.verifier is None:
            return True
        return bool(self.verifier())

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "question": self.question,
            "inputs": jsonable(self.inputs),
            "answer": self.answer,
            "witness": jsonable(self.witness),
            "assumptions": list(self.assumptions),
            "budget": self.budget,
            "notes": list(self.notes),
            "timing": round(self.timing, 6),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def summary(self) -> str:
        line = f"{self.question}: {self.answer}"
        if self.budget:
            line += f" (budget {self.budget})"
        return line


def jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    return str(x)


class timed:
    """Context manager stamping elapsed seconds onto a report."""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False

    def stamp(self, report: Report) -> Report:
        report.timing = time.perf_counter() - self.t0
        return report
