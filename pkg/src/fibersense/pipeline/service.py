"""HTTP and WebSocket surface over a running LivePipeline.

Every HTTP response body is {"ok": bool, "data"?: ..., "error"?: str}.
Validation problems are 400, commands in the wrong mode are 409.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from fibersense.errors import ModeError
from fibersense.pipeline.engine import LivePipeline
from fibersense.sim.sources import CarCommand, SetAudio, SetFan

_FRONTEND_DIST = Path(__file__).resolve().parents[3] / "frontend" / "dist"


def _ok(data) -> JSONResponse:
    return JSONResponse({"ok": True, "data": data})


def _fail(status: int, message: str) -> JSONResponse:
    return JSONResponse({"ok": False, "error": message}, status_code=status)


async def _read_json_object(request: Request) -> dict:
    try:
        body = await request.json()
    except json.JSONDecodeError as exc:
        raise ValueError(f"request body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise ValueError("request body must be a JSON object")
    return body


def _require(body: dict, key: str, kind, kind_name: str):
    if key not in body:
        raise ValueError(f"missing field {key!r}")
    value = body[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise ValueError(f"field {key!r} must be {kind_name}")
    return value


def create_app(pipeline: LivePipeline, frontend_dir: Path | None = _FRONTEND_DIST) -> FastAPI:
    app = FastAPI(title="fibersense", docs_url=None, redoc_url=None)

    @app.get("/api/status")
    async def status():
        return _ok(pipeline.status())

    @app.get("/api/config")
    async def config():
        return _ok(pipeline.config.to_dict())

    @app.get("/api/events")
    async def events(since: str | None = None, id: str | None = None):
        try:
            since_t = float(since) if since is not None else None
            event_id = int(id) if id is not None else None
        except ValueError:
            return _fail(400, "since must be a number and id an integer")
        records = pipeline.event_log.query(since_t_s=since_t, event_id=event_id)
        return _ok([r.to_dict() for r in records])

    async def _control(request: Request, build) -> JSONResponse:
        try:
            body = await _read_json_object(request)
            cmd = build(body)
        except ValueError as exc:
            return _fail(400, str(exc))
        try:
            applied = await asyncio.to_thread(pipeline.submit_command, cmd)
        except ModeError as exc:
            return _fail(409, str(exc))
        except ValueError as exc:
            return _fail(400, str(exc))
        return _ok({"applied_t_s": applied})

    @app.post("/api/control/fan")
    async def control_fan(request: Request):
        return await _control(
            request, lambda b: SetFan(on=_require(b, "on", bool, "a boolean"))
        )

    @app.post("/api/control/audio")
    async def control_audio(request: Request):
        def build(body):
            return SetAudio(
                signal_kind=_require(body, "signal", str, "a string"),
                on=_require(body, "on", bool, "a boolean"),
            )

        return await _control(request, build)

    @app.post("/api/control/car")
    async def control_car(request: Request):
        def build(body):
            action = _require(body, "command", str, "a string")
            speed = None
            if "speed_mps" in body and body["speed_mps"] is not None:
                speed = _require(body, "speed_mps", float, "a number")
            return CarCommand(action=action, speed_mps=speed)

        return await _control(request, build)

    @app.websocket("/api/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        snapshot, buf = pipeline.subscribe()
        seq = 0
        try:
            await ws.send_text(json.dumps(snapshot))
            while True:
                item = await asyncio.to_thread(buf.get, 0.25)
                if item is None:
                    if buf.overflowed:
                        await ws.send_text(
                            json.dumps({"type": "overflow", "reason": "subscriber too slow"})
                        )
                        await ws.close()
                        return
                    continue
                kind, payload = item
                message = {"type": kind, **payload}
                if kind == "event":
                    message["seq"] = seq
                    seq += 1
                await ws.send_text(json.dumps(message))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            pipeline.unsubscribe(buf)

    if frontend_dir is not None and frontend_dir.is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="console")

    return app


def serve(pipeline: LivePipeline, host: str, port: int) -> None:
    """Run until interrupted; starts the pipeline threads first."""
    import uvicorn

    pipeline.start()
    try:
        uvicorn.run(create_app(pipeline), host=host, port=port, log_level="warning")
    finally:
        pipeline.stop()
