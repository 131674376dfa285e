"""
Config Models Module
Pydantic models for campaign files and the YAML loader that reports errors by line
"""
from pathlib import Path
from typing import Any, List, Literal, Optional, Sequence, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigurationError

Mode = Literal["run", "sweep", "verify-recursion", "check-oracle", "bound"]
Family = Literal["constant_log", "two_phase", "sublinear", "user_constant", "classic_constant", "decreasing"]
LemmaTag = Literal["constant_log", "two_phase", "sublinear", "unroll", "decreasing_linear", "decreasing_quadratic"]

MAX_SEED = 2**64 - 1


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemBlock(_Block):
    """One problem instance of a run or sweep campaign"""

    kind: Literal["quadratic", "least_squares", "logistic"] = Field(
        description="Instance family: diagonal quadratic, finite-sum least squares or logistic regression."
    )
    label: Optional[str] = Field(default=None, description="Name shown in summaries; defaults to the kind.")
    dim: Optional[int] = Field(default=None, ge=1, description="Dimension n.")
    spectrum: Optional[List[float]] = Field(default=None, description="Quadratic eigenvalues, all >= 0.")
    mu: Optional[float] = Field(default=None, ge=0, description="Smallest quadratic eigenvalue when no spectrum is given.")
    condition_number: Optional[float] = Field(
        default=None, ge=1, description="L/mu of a geometric quadratic spectrum."
    )
    sigma2: float = Field(default=0.0, ge=0, description="Quadratic gradient-noise variance.")
    m: Optional[int] = Field(default=None, ge=1, description="Number of samples of a finite sum.")
    rank: Optional[int] = Field(default=None, ge=1, description="Rank of a generated Gaussian design.")
    design: Literal["gaussian", "cyclic_basis"] = Field(
        default="gaussian", description="Row generator for least squares: Gaussian rows or a_i = e_(i mod n)."
    )
    interpolating: bool = Field(default=False, description="Plant targets so every residual vanishes at x*.")
    target_noise: float = Field(default=1.0, ge=0, description="Noise of generated non-interpolating targets.")
    l2_penalty: Optional[float] = Field(default=None, gt=0, description="Logistic L2 penalty lambda.")
    label_flip: float = Field(default=0.1, ge=0, le=1, description="Fraction of flipped logistic labels.")
    data_seed: Optional[int] = Field(default=None, ge=0, le=MAX_SEED, description="Seed of the instance data.")
    x0_distance: float = Field(default=1.0, ge=0, description="Initial distance R = ||x0 - x*||.")
    x0: Optional[List[float]] = Field(default=None, description="Explicit starting point; overrides x0_distance.")

    @model_validator(mode="after")
    def _check_kind_fields(self):
        if self.kind == "quadratic":
            if self.spectrum is None and (self.dim is None or self.mu is None):
                raise ValueError("a quadratic needs either spectrum or dim and mu")
            if self.spectrum is not None and self.dim is not None and len(self.spectrum) != self.dim:
                raise ValueError(f"spectrum has {len(self.spectrum)} entries but dim is {self.dim}")
            if self.spectrum is not None and any(v < 0 for v in self.spectrum):
                raise ValueError("spectrum entries must be >= 0")
        else:
            if self.dim is None or self.m is None:
                raise ValueError(f"{self.kind} needs dim and m")
            if self.kind == "logistic" and self.l2_penalty is None:
                raise ValueError("logistic needs l2_penalty > 0")
        if self.x0 is not None and self.dim is not None and len(self.x0) != self.dim:
            raise ValueError(f"x0 has {len(self.x0)} entries but dim is {self.dim}")
        return self

    @property
    def name(self) -> str:
        return self.label or self.kind


class AlgorithmBlock(_Block):
    """Schedules and horizons of a run or sweep campaign"""

    schedules: List[Family] = Field(min_length=1, description="Schedule families to run.")
    horizons: List[int] = Field(min_length=1, description="Horizons T, each >= 1.")
    gamma: Optional[float] = Field(default=None, gt=0, description="Constant stepsize of user_constant.")
    decreasing_weights: Literal["linear", "quadratic"] = Field(
        default="linear", description="Weights of the decreasing family."
    )

    @field_validator("horizons")
    @classmethod
    def _positive_horizons(cls, horizons: List[int]) -> List[int]:
        if any(T < 1 for T in horizons):
            raise ValueError("every horizon must be >= 1")
        return horizons

    @model_validator(mode="after")
    def _check_gamma(self):
        if "user_constant" in self.schedules and self.gamma is None:
            raise ValueError("user_constant needs gamma")
        return self


class RecursionBlock(_Block):
    """Parameter grid of a verify-recursion campaign; d = factor * a + offset"""

    a: List[float] = Field(default=[0.1, 1.0], min_length=1)
    b: List[float] = Field(default=[0.5, 1.0], min_length=1)
    c: List[float] = Field(default=[0.0, 1.0, 100.0], min_length=1)
    T: List[int] = Field(default=[1, 2, 3, 10, 100, 1000], min_length=1)
    d_factors: List[float] = Field(default=[2.0, 20.0], min_length=1)
    d_offsets: List[float] = Field(default=[0.0], min_length=1)
    r0: List[float] = Field(default=[1.0], min_length=1)
    draws: int = Field(default=10_000, ge=1)
    chunk: int = Field(default=4096, ge=1)
    modes: List[Literal["tight", "slack"]] = Field(default=["tight", "slack"], min_length=1)
    lemmas: List[LemmaTag] = Field(
        default=["constant_log", "two_phase", "sublinear", "unroll", "decreasing_linear", "decreasing_quadratic"],
        min_length=1,
    )
    gating_lemmas: List[LemmaTag] = Field(default=["constant_log", "two_phase", "sublinear", "unroll"])
    s_strategy: Literal["uniform", "zero", "max"] = "uniform"
    per_draw_rows: bool = False

    @field_validator("T")
    @classmethod
    def _non_negative_horizons(cls, horizons: List[int]) -> List[int]:
        if any(T < 0 for T in horizons):
            raise ValueError("every horizon must be >= 0")
        return horizons

    @field_validator("r0", mode="before")
    @classmethod
    def _r0_as_list(cls, value: Any) -> Any:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return [value]
        return value

    @field_validator("r0")
    @classmethod
    def _non_negative_r0(cls, values: List[float]) -> List[float]:
        if any(not r0 >= 0 for r0 in values):
            raise ValueError("every r0 must be >= 0")
        return values


class OracleCheckBlock(_Block):
    """Sampling sizes of a check-oracle campaign"""

    points: int = Field(default=20, ge=1, description="Random query points per instance.")
    samples: int = Field(default=10_000, ge=1000, description="Oracle calls per second-moment estimate.")
    unbiasedness_samples: int = Field(default=100_000, ge=2, description="Oracle calls per unbiasedness check.")
    point_scale: float = Field(default=1.0, gt=0, description="Query points are x* plus N(0, scale^2 I).")
    standard_instances: bool = Field(default=True, description="Include the built-in instance grid.")


class BoundBlock(_Block):
    """Constants for mode: bound"""

    mu: float = Field(ge=0)
    L: float = Field(gt=0)
    R: float = Field(ge=0)
    sigma2: float = Field(ge=0)
    T: int = Field(ge=1)
    gamma: Optional[float] = Field(default=None, gt=0)


class ExperimentConfig(_Block):
    """One campaign file"""

    mode: Mode
    master_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    replicates: int = Field(default=1, ge=1)
    output: Optional[str] = None
    workers: Optional[int] = Field(default=None, ge=1)
    problems: List[ProblemBlock] = Field(default_factory=list)
    algorithm: Optional[AlgorithmBlock] = None
    recursion: RecursionBlock = Field(default_factory=RecursionBlock)
    oracle_check: OracleCheckBlock = Field(default_factory=OracleCheckBlock)
    bound: Optional[BoundBlock] = None

    @model_validator(mode="after")
    def _check_mode_blocks(self):
        if self.mode in ("run", "sweep"):
            if not self.problems:
                raise ValueError(f"mode {self.mode} needs at least one entry in problems")
            if self.algorithm is None:
                raise ValueError(f"mode {self.mode} needs an algorithm block")
        if self.mode == "bound" and self.bound is None:
            raise ValueError("mode bound needs a bound block")
        return self

    def to_yaml(self) -> str:
        """Serialize to YAML that load_config_text parses back to an equal model"""
        return yaml.safe_dump(self.model_dump(mode="json", exclude_none=True), sort_keys=False)


# ---------------------------------------------------------------------------
# loading


def _node_line(root: Optional[yaml.Node], loc: Sequence[Union[str, int]]) -> Optional[int]:
    """1-based line of the deepest YAML node on the error path"""
    node = root
    line = None if node is None else node.start_mark.line + 1
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            match = next((v for k, v in node.value if k.value == key), None)
            if match is None:
                match = next((k for k, _ in node.value if k.value == key), None)
            node = match
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
        if node is None:
            break
        line = node.start_mark.line + 1
    return line


def _format_errors(exc: ValidationError, root: Optional[yaml.Node]) -> List[str]:
    messages = []
    for error in exc.errors():
        loc: Tuple[Any, ...] = tuple(error["loc"])
        field = ".".join(str(part) for part in loc) or "<root>"
        text = error["msg"].removeprefix("Value error, ")
        line = _node_line(root, loc)
        suffix = f" (line {line})" if line is not None else ""
        messages.append(f"{field}: {text}{suffix}")
    return messages


def load_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    """
    Parse and validate a campaign document

    Args:
        text: YAML document
        source: Name used in error messages

    Returns:
        Validated ExperimentConfig
    """
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ConfigurationError(f"{source}: invalid YAML{where}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{source}: expected a mapping at the top level")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        details = "\n  ".join(_format_errors(exc, root))
        raise ConfigurationError(f"{source}: invalid campaign file\n  {details}") from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate a campaign file"""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}") from None
    return load_config_text(text, source=str(path))
