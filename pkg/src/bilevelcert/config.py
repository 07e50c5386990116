"""Central tolerance and finite-difference configuration.

Every oracle-facing constant lives here so that tests and the CLI share a
single source of truth.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class FDConfig:
    """Central finite-difference contract: step scaled to point magnitude."""

    step_scale: float = 6.055454452393343e-06  # cbrt(machine epsilon)
    rel_tol: float = 1e-6

    def step(self, coordinate_value: float) -> float:
        return self.step_scale * max(1.0, abs(coordinate_value))


@dataclass(frozen=True)
class Tolerances:
    active: float = 1e-8      # active-set detection
    residual: float = 1e-9    # equation residual
    cone: float = 1e-9        # cone-membership margin
    branch_cap: int = 3 ** 12  # total branch enumeration cap
    poly_row_cap: int = 12     # max constraint rows for general gph N_K

    def override(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_FD = FDConfig()
DEFAULT_TOLERANCES = Tolerances()
