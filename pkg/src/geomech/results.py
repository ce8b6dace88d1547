"""Small result containers shared by the verification operations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .symexpr import EvalPoint, Verdict


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a componentwise zero/equality check.

    ``status`` is "pass", "fail" or "undecided"; failures carry the
    offending component label and, when sampling found one, a witness
    point.
    """

    status: str
    component: Optional[str] = None
    witness: Optional[EvalPoint] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.status == "pass"

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def merge_componentwise(results) -> CheckResult:
    """Combine labeled EqualityResults: fail > undecided > pass."""
    undecided = None
    for label, res in results:
        if res.verdict is Verdict.NOT_EQUAL:
            return CheckResult("fail", component=label, witness=res.witness)
        if res.verdict is Verdict.UNDECIDED and undecided is None:
            undecided = CheckResult("undecided", component=label)
    return undecided if undecided is not None else CheckResult("pass")


@dataclass
class Report:
    """Named sub-check results, e.g. one entry per structure axiom."""

    entries: dict = field(default_factory=dict)

    def add(self, name: str, result: CheckResult):
        self.entries[name] = result

    def __getitem__(self, name: str) -> CheckResult:
        return self.entries[name]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.entries.values())

    def failures(self):
        return {k: v for k, v in self.entries.items() if not v.passed}
