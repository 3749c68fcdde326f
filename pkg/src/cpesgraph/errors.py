"""Exception types raised across the toolkit."""


class CpesError(Exception):
    """Base class for all toolkit errors."""


class ParseError(CpesError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class ShapeError(CpesError):
    """Malformed shapes graph."""


class CycleError(CpesError):
    """A cycle in the rdfs:subClassOf hierarchy."""


class GridError(CpesError):
    """Grid tables violate a structural invariant."""


class RefError(GridError):
    """An element references a bus id that does not exist."""

    def __init__(self, bus_id, element: str = ""):
        where = f" (referenced by {element})" if element else ""
        super().__init__(f"unknown bus {bus_id}{where}")
        self.bus_id = bus_id


class ValidationError(CpesError):
    """Graph lacks properties required to rebuild grid tables."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class RuleError(CpesError):
    """Malformed augmentation rule."""


class BindError(RuleError):
    """A template references a variable the selector did not bind."""


class PostValidationError(CpesError):
    def __init__(self, report):
        super().__init__(f"augmented graph does not conform: {len(report.violations)} violation(s)")
        self.report = report


class DanglingRefError(CpesError):
    """A control value references a unit that is not in the graph."""


class AttackError(CpesError):
    """Invalid attack scenario."""


class SingularityError(CpesError):
    """Part of the network is not connected to any slack bus."""


class NonConvergence(CpesError):
    def __init__(self, iterations: int, final_mismatch: float):
        super().__init__(f"power flow did not converge after {iterations} iterations "
                         f"(max mismatch {final_mismatch:.3e} pu)")
        self.iterations = iterations
        self.final_mismatch = final_mismatch


class TopologyMismatch(CpesError):
    """Baseline and attacked results describe different transformer sets."""
