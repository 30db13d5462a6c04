"""Request/response models for the recognition service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class RoiModel(BaseModel):
    x: int
    y: int
    w: int = Field(ge=1)
    h: int = Field(ge=1)


class PreprocessRequest(BaseModel):
    image_b64: str
    config: dict[str, str] = Field(default_factory=dict)


class ImageResponse(BaseModel):
    image_b64: str
    width: int
    height: int


class DetectRoiRequest(BaseModel):
    image_b64: str
    face_cascade: str
    mouth_cascade: str
    config: dict[str, str] = Field(default_factory=dict)


class KeypointsRequest(BaseModel):
    image_b64: str
    scenario: int = Field(ge=1, le=3)
    roi: Optional[RoiModel] = None
    with_descriptors: bool = False
    config: dict[str, str] = Field(default_factory=dict)


class KeypointsResponse(BaseModel):
    csv: str
    descriptors: Optional[list[str]] = None


class RecognizeRequest(BaseModel):
    image_b64: str
    scenario: int = Field(ge=1, le=3)
    roi: Optional[RoiModel] = None
    config: dict[str, str] = Field(default_factory=dict)


class RecognizeResponse(BaseModel):
    label: str
    diagnostics: dict[str, Any]


class EvaluateRequest(BaseModel):
    manifest_path: str
    scenario: int = Field(ge=1, le=3)
    format: str = "csv"
    rotation_sweep: bool = False
    config: dict[str, str] = Field(default_factory=dict)


class EvaluateResponse(BaseModel):
    report: str
    accuracy: float


class SynthRequest(BaseModel):
    out_dir: str
    n: int = Field(ge=1)
    seed: int = 0
    symmetric: bool = False


class SynthResponse(BaseModel):
    manifest_path: str
    count: int


class HealthResponse(BaseModel):
    status: str
    version: str
