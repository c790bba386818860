from dataclasses import dataclass, field


@dataclass
class Verdict:
    """Outcome of a comparability or attractiveness check.

    ``certificate`` is ``None`` when the check holds; otherwise it is a dict
    naming the violated condition and enough data to replay it.
    """

    holds: bool
    certificate: dict | None = None
    evaluated: int = 0
    notes: list = field(default_factory=list)

    def __bool__(self):
        return self.holds

    def describe(self) -> str:
        if self.holds:
            return "holds"
        parts = [f"{k}={v}" for k, v in (self.certificate or {}).items()]
        return "fails: " + ", ".join(parts)


def passed(evaluated=0) -> Verdict:
    return Verdict(True, None, evaluated)


def failed(evaluated=0, **certificate) -> Verdict:
    return Verdict(False, certificate, evaluated)
