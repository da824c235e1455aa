from datetime import datetime
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field


class ProducedFile(BaseModel):
    name: str = Field(..., description="Path relative to the run directory")
    sha256: str
    size_bytes: int


class RunManifest(BaseModel):
    """Written last into the run directory; the config echo and seed reproduce the run."""
    experiment: str
    config: Dict[str, Any] = Field(..., description="Fully resolved RunConfig")
    seed: int
    version: str
    started_at: datetime
    duration_seconds: float
    status: Literal["complete", "incomplete"]
    files: List[ProducedFile] = Field(default_factory=list)
    metrics: Dict[str, Any] = Field(default_factory=dict)
    logs: List[str] = Field(default_factory=list, description="Warnings captured during the run")
    error: Optional[str] = None
