import json
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from bifi.config import settings
from bifi.models.presets import TestPreset, get_preset

Command = Literal["run-test", "sweep", "solve-hf", "solve-lf", "reference", "selftest"]


class RunConfig(BaseModel):
    """A fully validated command line / config file request."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command = "run-test"
    preset: Optional[int] = Field(default=None, ge=1, le=5)
    custom: Optional[TestPreset] = None
    epsilon: Optional[float] = Field(default=None, ge=1e-12)
    n: Optional[int] = Field(default=None, ge=0)
    n_list: Optional[List[int]] = None
    candidates: Optional[int] = Field(default=None, ge=1)
    lf_sigma_scale: Optional[float] = Field(default=None, gt=0.0)
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0)
    validation_seed: int = Field(default_factory=lambda: settings.VALIDATION_SEED, ge=0)
    out: str = Field(default_factory=lambda: settings.OUTPUT_DIR, min_length=1)
    workers: Optional[int] = Field(default=None, ge=1)
    cache: Optional[str] = None
    z: Optional[List[float]] = None

    @field_validator("n_list")
    @classmethod
    def _check_n_list(cls, value):
        if value is not None:
            if not value:
                raise ValueError("n_list must not be empty")
            if min(value) < 1:
                raise ValueError(f"n_list entries must be >= 1, got {min(value)}")
        return value

    @field_validator("z")
    @classmethod
    def _check_z(cls, value):
        if value is not None and any(abs(v) > 1.0 for v in value):
            raise ValueError("parameter entries must lie in [-1, 1]")
        return value

    @model_validator(mode="after")
    def _check_preset(self):
        if self.command == "selftest":
            return self
        if (self.preset is None) == (self.custom is None):
            raise ValueError("exactly one of 'preset' and 'custom' must be given")
        if self.command == "sweep" and self.n_list is None:
            raise ValueError("the sweep command needs n_list")
        if self.z is not None and len(self.z) != self.resolve_preset().dimension:
            raise ValueError(f"z has {len(self.z)} entries, the preset has dimension {self.resolve_preset().dimension}")
        return self

    def resolve_preset(self) -> TestPreset:
        """Base preset with the command-line overrides applied."""
        base = self.custom if self.custom is not None else get_preset(self.preset)
        return base.with_overrides(epsilon=self.epsilon, n=self.n, candidates=self.candidates,
                                   lf_sigma_scale=self.lf_sigma_scale)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"
