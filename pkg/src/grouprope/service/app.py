"""HTTP face of the core library.

Every endpoint is a pure function of its request body, so responses are
byte-deterministic; the CLI rides on that to produce reproducible files
whether it talks to an in-process app or a remote server.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from ..attention import RopeConfig
from ..compare import compare_schemes
from ..errors import RemapError
from ..formats import render_capacity_csv, render_dual_nll_csv, render_rel_pos_csv
from ..grouping import ConstantSize, build_map_parallel, logistic_growth
from ..posmap import assign_positions, capacity_report, max_context_length, rel_pos_matrix
from ..toy import ToyDecoderWeights, toy_forward
from .schemas import (
    CapacityRequest,
    CompareRequest,
    MapRequest,
    RelPosRequest,
    ToyNllRequest,
    build_grouping,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="grouprope",
        description="Grouped rotary position remapping for long-context attention",
    )

    @app.exception_handler(RemapError)
    async def remap_error(_: Request, exc: RemapError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": exc.kind, "detail": exc.detail})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/map")
    def map_endpoint(req: MapRequest) -> JSONResponse:
        index_map = build_map_parallel(req.n, build_grouping(req.function))
        return JSONResponse(index_map.to_json_dict())

    @app.post("/relpos")
    def relpos_endpoint(req: RelPosRequest):
        assignment = assign_positions(req.n, req.window, req.train_len, build_grouping(req.function))
        if req.format == "json":
            return JSONResponse(assignment.to_json_dict())
        return PlainTextResponse(render_rel_pos_csv(rel_pos_matrix(assignment)), media_type="text/csv")

    @app.post("/capacity")
    def capacity_endpoint(req: CapacityRequest):
        rows = []
        for spec in req.functions:
            fn = build_grouping(spec)
            row = dict(spec.model_dump(exclude_none=True))
            row["window"] = req.window
            row["train_len"] = req.train_len
            row["max_context_length"] = max_context_length(req.train_len, req.window, fn)
            if req.window >= 1:
                report = capacity_report(req.train_len, req.window, fn)
                row["formula_value"] = report.formula_value
                row["difference"] = report.difference
            rows.append(row)
        if req.format == "json":
            return JSONResponse({"rows": rows})
        return PlainTextResponse(render_capacity_csv(rows), media_type="text/csv")

    @app.post("/compare")
    def compare_endpoint(req: CompareRequest) -> JSONResponse:
        constant = ConstantSize(req.constant_size)
        logistic = logistic_growth(req.capacity, req.growth_rate)
        return JSONResponse(
            compare_schemes(constant, logistic, req.n, req.window, req.train_len)
        )

    @app.post("/toynll")
    def toynll_endpoint(req: ToyNllRequest) -> PlainTextResponse:
        weights = ToyDecoderWeights.generate(
            req.vocab, req.layers, req.heads, req.head_dim, req.seed
        )
        cfg = RopeConfig(head_dim=req.head_dim, base=req.base)
        tokens = np.asarray(req.tokens, dtype=np.int64)
        assignment = assign_positions(
            len(tokens), req.window, req.train_len, build_grouping(req.function)
        )
        vanilla = toy_forward(tokens, weights, cfg, None)
        merged = toy_forward(tokens, weights, cfg, assignment)
        return PlainTextResponse(render_dual_nll_csv(vanilla, merged), media_type="text/csv")

    return app


app = create_app()
