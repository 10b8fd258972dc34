import math
from typing import Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, model_validator


def _non_negative(values) -> bool:
    """True unless some value is negative; nan marks an entry that could not be computed."""
    return not any(isinstance(v, float) and v < 0.0 for v in values)


class DiagnosticRecord(BaseModel):
    k: int
    true_err_mean: float
    bound: float
    bound_mean_form: float
    Rs_median: float
    Rs_min: float
    Rs_max: float
    Re: float

    @model_validator(mode="after")
    def _check_signs(self):
        if not _non_negative(self.model_dump().values()):
            raise ValueError(f"negative diagnostic at k={self.k}")
        return self


class ErrorDiagnostics(BaseModel):
    records: List[DiagnosticRecord] = []

    def to_frame(self) -> pd.DataFrame:
        columns = ["k", "true_err_mean", "bound", "Rs_median", "Rs_min", "Rs_max", "Re"]
        return pd.DataFrame([r.model_dump(include=set(columns)) for r in self.records], columns=columns)


class ConvergenceRow(BaseModel):
    n: int
    e_mean: float
    e_std: float
    bound: float
    Re: float


class Baseline(BaseModel):
    e_mean: float
    e_std: float


class ExperimentReport(BaseModel):
    """Everything a run produces; summary.json is its model_dump()."""

    preset: int
    name: str
    n: int
    x: List[float]
    mean_bf: List[float]
    std_bf: List[float]
    mean_ref: List[float]
    std_ref: List[float]
    e_mean: float
    e_std: float
    lf_baseline: Baseline
    convergence: List[ConvergenceRow] = []
    diagnostics: ErrorDiagnostics = ErrorDiagnostics()
    selected: List[int] = []
    pivots: List[float] = []
    sparse_nodes: int = 0
    jitter: float = 0.0
    stability: Dict[str, float] = {}
    timings: Dict[str, float] = {}
    config_echo: Optional[str] = None

    @model_validator(mode="after")
    def _check_errors(self):
        for value in (self.e_mean, self.e_std, self.lf_baseline.e_mean, self.lf_baseline.e_std):
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"reported error {value} is not finite and non-negative")
        return self

    def profiles_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "x": self.x,
            "mean_bf": self.mean_bf,
            "std_bf": self.std_bf,
            "mean_ref": self.mean_ref,
            "std_ref": self.std_ref,
        })

    def convergence_frame(self) -> pd.DataFrame:
        columns = ["n", "e_mean", "e_std", "bound", "Re"]
        return pd.DataFrame([row.model_dump() for row in self.convergence], columns=columns)
