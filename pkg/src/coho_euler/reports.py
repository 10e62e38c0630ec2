"""Named check results collected by the validation entry points."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tol: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"{status}  {self.name}: residual={self.residual:.3e} (tol={self.tol:.1e})"
        if self.detail:
            msg += f" [{self.detail}]"
        return msg


@dataclass
class ValidationReport:
    """An ordered list of named checks; passes iff every check passes."""

    checks: list[CheckResult] = field(default_factory=list)

    def add(self, name, residual, tol, detail=""):
        residual = float(residual)
        self.checks.append(
            CheckResult(name, residual, float(tol), residual < tol, detail)
        )

    def add_flag(self, name, passed, detail=""):
        # For yes/no checks with no meaningful residual.
        self.checks.append(
            CheckResult(name, 0.0 if passed else 1.0, 1.0, bool(passed), detail)
        )

    def extend(self, other: "ValidationReport", prefix: str = ""):
        for c in other.checks:
            name = f"{prefix}{c.name}" if prefix else c.name
            self.checks.append(CheckResult(name, c.residual, c.tol, c.passed, c.detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]
