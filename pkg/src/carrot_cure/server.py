"""HTTP diagnosis service: upload a carrot photo, get the predicted class
with per-class probabilities and the matching bilingual remedy.

The model and knowledge base are loaded once at startup and shared
immutably across request handlers; no endpoint mutates server state.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field
from starlette.datastructures import UploadFile

from .dataset import CLASS_KEYS, class_by_key
from .imaging import DecodeError, FuzzyFilterConfig, decode_image, preprocess
from .remedy import RemedyEntry, load_remedy_kb
from .zoo import Model, load_model

MAX_UPLOAD_BYTES = 10 * 1024 * 1024


class ApiError(Exception):
    def __init__(self, status_code: int, error: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.error = error
        self.message = message


@dataclass(frozen=True)
class Prediction:
    class_key: str
    confidence: float
    probabilities: dict[str, float]


class HealthResponse(BaseModel):
    model_config = {"protected_namespaces": ()}

    status: str
    model_loaded: bool


class ClassInfo(BaseModel):
    key: str
    name_en: str
    name_bn: str


class RemedyPayload(BaseModel):
    disease_name_en: str
    disease_name_bn: str
    cure_en: str
    cure_bn: str
    medicine: str


class PredictionResponse(BaseModel):
    predicted_class: str = Field(alias="class")
    confidence: float
    probabilities: dict[str, float]
    remedy: RemedyPayload

    model_config = {"populate_by_name": True}


def _fuzzy_from_metadata(model: Model) -> Optional[FuzzyFilterConfig]:
    """Mirror the training-time denoise config recorded in the model."""
    meta = model.metadata.get("fuzzy", "unset")
    if meta is None:
        return None
    if isinstance(meta, dict):
        return FuzzyFilterConfig(window=int(meta["window"]),
                                 threshold=float(meta["threshold"]))
    return FuzzyFilterConfig()


def predict_image(model: Model, kb: dict[str, RemedyEntry],
                  image_bytes: bytes) -> tuple[Prediction, RemedyEntry]:
    """Decode, preprocess exactly as in training, and classify one image."""
    img = decode_image(image_bytes)
    fuzzy = _fuzzy_from_metadata(model)
    size = int(model.metadata.get("input_size", model.spec.input_shape[0]))
    if fuzzy is None:
        from .imaging import resize_bilinear, to_input_tensor

        x = to_input_tensor(resize_bilinear(img, size, size), size)
    else:
        x = preprocess(img, fuzzy, size)
    batch = x.reshape((1, *x.shape))
    probs = model.predict_probs(batch).data[0]

    keys = model.metadata.get("class_keys", list(CLASS_KEYS))
    class_idx = int(np.argmax(probs))
    key = keys[class_idx]
    prediction = Prediction(
        class_key=key,
        confidence=float(probs[class_idx]),
        probabilities={k: float(p) for k, p in zip(keys, probs)},
    )
    return prediction, kb[key]


def create_app(model: Optional[Model], kb: dict[str, RemedyEntry],
               static_dir: Optional[Path | str] = None) -> FastAPI:
    app = FastAPI(title="Carrot Cure", version="0.1.0")

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": exc.error, "message": exc.message},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", model_loaded=model is not None)

    @app.get("/api/v1/classes", response_model=list[ClassInfo])
    def classes() -> list[ClassInfo]:
        ordered = sorted(kb.values(), key=lambda e: class_by_key(e.class_key).id)
        return [
            ClassInfo(key=e.class_key, name_en=e.disease_name_en, name_bn=e.disease_name_bn)
            for e in ordered
        ]

    @app.post("/api/v1/predict", response_model=PredictionResponse,
              response_model_by_alias=True)
    async def predict(request: Request) -> PredictionResponse:
        if model is None:
            raise ApiError(503, "model_unavailable", "no model is loaded")
        length = request.headers.get("content-length")
        if length is not None and int(length) > MAX_UPLOAD_BYTES:
            raise ApiError(413, "payload_too_large",
                           f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        try:
            form = await request.form()
        except Exception:
            raise ApiError(400, "bad_image",
                           "expected a multipart form with an 'image' file field")
        upload = form.get("image")
        if not isinstance(upload, UploadFile):
            raise ApiError(400, "bad_image",
                           "multipart field 'image' must be a PNG or JPEG file")
        data = await upload.read()
        if len(data) > MAX_UPLOAD_BYTES:
            raise ApiError(413, "payload_too_large",
                           f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        try:
            prediction, remedy = predict_image(model, kb, data)
        except DecodeError as exc:
            raise ApiError(400, "bad_image", str(exc))
        return PredictionResponse(
            predicted_class=prediction.class_key,
            confidence=prediction.confidence,
            probabilities=prediction.probabilities,
            remedy=RemedyPayload(
                disease_name_en=remedy.disease_name_en,
                disease_name_bn=remedy.disease_name_bn,
                cure_en=remedy.cure_en,
                cure_bn=remedy.cure_bn,
                medicine=remedy.medicine,
            ),
        )

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def create_app_from_paths(model_path: Path | str, kb_path: Path | str,
                          static_dir: Optional[Path | str] = None) -> FastAPI:
    """Load model and KB eagerly so an invalid artifact fails at startup."""
    model = load_model(model_path)
    kb = load_remedy_kb(kb_path)
    return create_app(model, kb, static_dir)
