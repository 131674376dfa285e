"""
Report Models Module
Pydantic models for bound evaluations and aggregated campaign results
"""
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class BoundReport(BaseModel):
    """Theoretical bounds for one (mu, L, R, sigma2, T) setting"""

    model_config = ConfigDict(frozen=True)

    theorem_branch_exp: float = Field(
        description="64 L R^2 exp(-mu T / 4L) + 36 sigma2 / (mu T); +inf when mu = 0."
    )
    theorem_branch_sub: float = Field(description="2 L R^2 / T + 2 sigma R / sqrt(T).")
    theorem_min: float = Field(description="Smaller of the two branches.")
    last_iterate_distance_bound: Optional[float] = Field(
        default=None,
        description="(1 - mu gamma)^T R^2 + gamma sigma2 / mu for the constant gamma used; None when mu = 0.",
    )
    distance_gamma: Optional[float] = Field(default=None, description="Stepsize the distance bound was evaluated at.")
    improved_informational: Optional[float] = Field(
        default=None,
        description="mu R^2 exp(-mu T / L) + sigma2 / (mu T); reported for reference only, never checked.",
    )
    measured_over_bound: Dict[str, float] = Field(
        default_factory=dict,
        description="Measured quantity (mean + CI) divided by the bound it is checked against.",
    )


class FamilyCheck(BaseModel):
    """One bound check attached to a campaign cell"""

    name: str = Field(description="Which measured quantity is compared with which bound.")
    measured: float = Field(description="Replicate mean of the measured quantity.")
    ci_halfwidth: float = Field(description="99% normal-approximation halfwidth of the mean.")
    bound: float = Field(description="Bound value the mean must not exceed by more than 3 CI.")
    gating: bool = Field(default=True, description="Whether a failure affects the exit status.")

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound + 3.0 * self.ci_halfwidth

    @property
    def ratio(self) -> float:
        if self.bound == 0.0:
            return 0.0 if self.measured + self.ci_halfwidth <= 0.0 else float("inf")
        return (self.measured + self.ci_halfwidth) / self.bound


class ReplicateRow(BaseModel):
    """Metrics of a single replicate"""

    index: int
    seed: int
    f_gap_avg: float
    dist_sq_last: float
    composite: float


class CampaignAggregate(BaseModel):
    """Replicate statistics of one (problem, schedule, T) cell"""

    kind: str
    problem: Optional[str] = Field(default=None, description="Label of the problem block the cell came from.")
    n: int
    mu: float
    L: float
    sigma2: float
    R: float
    schedule: str
    T: int
    seed: int = Field(description="Master seed the replicate streams derive from.")
    n_replicates: int
    mean_f_gap: float
    mean_dist_sq: float
    mean_composite: float
    std_composite: float
    ci_composite: float
    bounds: BoundReport
    ratio: float = Field(description="(mean composite + CI) / theorem_min.")
    checks: List[FamilyCheck] = Field(default_factory=list)
    replicates: List[ReplicateRow] = Field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks if check.gating)
