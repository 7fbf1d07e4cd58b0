"""Pass/fail check records shared by the verification suites."""
from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    passed: bool
    residual: float
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.residual = float(self.residual)


@dataclass
class SuiteReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        return next(c for c in self.checks if c.name == name)

    def rows(self):
        return [(c.name, c.passed, c.residual) for c in self.checks]
