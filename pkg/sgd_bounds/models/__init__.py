"""
Models Package
Export all Pydantic configuration and report models
"""
from .config import (
    AlgorithmBlock,
    ExperimentConfig,
    OracleCheckBlock,
    ProblemBlock,
    RecursionBlock,
    load_config,
    load_config_text,
)
from .reports import BoundReport, CampaignAggregate, FamilyCheck, ReplicateRow

__all__ = [
    "ExperimentConfig",
    "ProblemBlock",
    "AlgorithmBlock",
    "RecursionBlock",
    "OracleCheckBlock",
    "load_config",
    "load_config_text",
    "BoundReport",
    "CampaignAggregate",
    "FamilyCheck",
    "ReplicateRow",
]
