"""FastAPI wrapper around the core pipeline.

One process serves many clients; the CLI is a thin client of these
endpoints (in-process by default, over the wire with --server).
"""

from __future__ import annotations

import base64
import binascii

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import Config
from ..errors import LipkeyError
from ..harness import emit_report, evaluate, load_manifest, rotation_sweep, summarize_rotation
from ..image import GrayImage, Rect, load_pgm, save_pgm
from ..keypoints import describe_at, keypoints_to_csv, orientation_at
from ..preprocess import enhance
from ..recognize import extract_keypoints, run_scenario
from ..roi import detect_roi, load_cascade
from ..synth import generate_corpus
from .schemas import (
    DetectRoiRequest,
    EvaluateRequest,
    EvaluateResponse,
    HealthResponse,
    ImageResponse,
    KeypointsRequest,
    KeypointsResponse,
    PreprocessRequest,
    RecognizeRequest,
    RecognizeResponse,
    RoiModel,
    SynthRequest,
    SynthResponse,
)


def _decode_image(image_b64: str) -> GrayImage:
    try:
        raw = base64.b64decode(image_b64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"bad base64 image: {exc}") from exc
    return load_pgm(raw)


def _encode_image(img: GrayImage) -> str:
    return base64.b64encode(save_pgm(img)).decode("ascii")


def _config(values: dict[str, str]) -> Config:
    return Config(values)


def _roi(model: RoiModel | None) -> Rect | None:
    if model is None:
        return None
    return Rect(model.x, model.y, model.w, model.h)


def create_app() -> FastAPI:
    app = FastAPI(title="lipkey", version=__version__)

    @app.exception_handler(LipkeyError)
    async def _domain_error(_, exc: LipkeyError):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/config/defaults")
    def config_defaults() -> dict[str, object]:
        return Config().as_dict()

    @app.post("/preprocess", response_model=ImageResponse)
    def preprocess(req: PreprocessRequest) -> ImageResponse:
        img = _decode_image(req.image_b64)
        out = enhance(img, _config(req.config).enhance_params())
        return ImageResponse(image_b64=_encode_image(out), width=out.width, height=out.height)

    @app.post("/detect-roi", response_model=RoiModel)
    def detect(req: DetectRoiRequest) -> RoiModel:
        img = _decode_image(req.image_b64)
        cfg = _config(req.config)
        enhanced = enhance(img, cfg.enhance_params())
        rect = detect_roi(enhanced, load_cascade(req.face_cascade), load_cascade(req.mouth_cascade))
        return RoiModel(x=rect.x, y=rect.y, w=rect.w, h=rect.h)

    @app.post("/keypoints", response_model=KeypointsResponse)
    def keypoints(req: KeypointsRequest) -> KeypointsResponse:
        img = _decode_image(req.image_b64)
        cfg = _config(req.config)
        kps = extract_keypoints(img, req.scenario, cfg, _roi(req.roi))
        if not req.with_descriptors:
            return KeypointsResponse(csv=keypoints_to_csv(kps))
        enhanced = enhance(img, cfg.enhance_params())
        described = []
        hexes = []
        for kp in kps:
            try:
                angle = orientation_at(enhanced, kp.x, kp.y, kp.scale)
                descriptor = describe_at(enhanced, kp.x, kp.y, angle, kp.scale)
            except LipkeyError:
                continue  # pattern leaves the frame: skip border keypoints
            described.append(type(kp)(kp.x, kp.y, kp.score, kp.scale, angle))
            hexes.append(descriptor.hex())
        return KeypointsResponse(csv=keypoints_to_csv(described), descriptors=hexes)

    @app.post("/recognize", response_model=RecognizeResponse)
    def recognize(req: RecognizeRequest) -> RecognizeResponse:
        img = _decode_image(req.image_b64)
        result = run_scenario(img, req.scenario, _config(req.config), roi=_roi(req.roi))
        return RecognizeResponse(label=result.label, diagnostics=result.diagnostics)

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate_manifest(req: EvaluateRequest) -> EvaluateResponse:
        cfg = _config(req.config)
        try:
            entries = load_manifest(req.manifest_path)
        except OSError as exc:
            raise HTTPException(status_code=400, detail=f"cannot read manifest: {exc}") from exc
        report = evaluate(entries, req.scenario, cfg)
        if req.rotation_sweep:
            summary = summarize_rotation(rotation_sweep(entries, req.scenario, cfg))
            if summary is not None:
                report.rotation_min, report.rotation_mean, report.rotation_max = summary
        return EvaluateResponse(report=emit_report(report, req.format), accuracy=report.accuracy)

    @app.post("/synth", response_model=SynthResponse)
    def synth(req: SynthRequest) -> SynthResponse:
        manifest = generate_corpus(req.out_dir, req.n, req.seed, req.symmetric)
        return SynthResponse(manifest_path=manifest, count=req.n)

    return app
