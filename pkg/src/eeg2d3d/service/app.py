"""FastAPI service exposing the pipeline stages.

The handlers delegate to :mod:`eeg2d3d.service.ops`; the CLI calls the same
operations in-process. All paths in requests are resolved on the server.
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import DataError, NumericalError
from . import ops, schemas


def create_app() -> FastAPI:
    app = FastAPI(
        title="eeg2d3d",
        version=__version__,
        description="EEG band-power pipeline discriminating 2D vs. 3D video watching",
    )

    @app.exception_handler(DataError)
    async def data_error_handler(request: Request, exc: DataError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(NumericalError)
    async def numerical_error_handler(request: Request, exc: NumericalError) -> JSONResponse:
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
        return ops.synth(req)

    @app.post("/validate", response_model=schemas.ValidateResponse)
    def validate(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
        return ops.validate(req)

    @app.post("/bandselect", response_model=schemas.BandselectResponse)
    def bandselect(req: schemas.BandselectRequest) -> schemas.BandselectResponse:
        return ops.bandselect(req)

    @app.post("/features", response_model=schemas.FeaturesResponse)
    def features(req: schemas.FeaturesRequest) -> schemas.FeaturesResponse:
        return ops.features(req)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
        return ops.train(req)

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
        return ops.evaluate(req)

    @app.post("/run", response_model=schemas.RunResponse)
    def run(req: schemas.RunRequest) -> schemas.RunResponse:
        return ops.run(req)

    return app


app = create_app()
