"""Read-mostly HTTP service over a run's artifacts.

Serves the graph, report, and failure modes as JSON, and accepts manual node
selections which are validated, turned into failure modes, and appended to
the persisted modes document so later training picks them up.  All artifacts
must carry the same config hash; mixed sets are refused at startup.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import modes as modes_mod
from .errors import FailmapError, SelectionError
from .mapper import graph_from_dict
from .pipeline import PipelineConfig, canonical_json, load_stage


class SelectionRequest(BaseModel):
    node_ids: list[int]


class ArtifactStore:
    """Loaded artifacts plus the single-writer path for manual selections."""

    def __init__(self, artifact_dir):
        self.dir = Path(artifact_dir)
        graph_path = self.dir / "graph.json"
        if not graph_path.exists():
            raise FailmapError(f"missing artifact {graph_path}")
        self.graph_doc = json.loads(graph_path.read_text())
        self.graph = graph_from_dict(self.graph_doc)
        self.config = PipelineConfig.from_dict(self.graph_doc.get("config", {}))
        self.config_hash = self.graph_doc.get("config_hash")

        self._check_provenance()

        modes_path = self.dir / "modes.json"
        if modes_path.exists():
            self.modes_doc = json.loads(modes_path.read_text())
        else:
            self.modes_doc = {
                "schema": "failure-modes/1",
                "config_hash": self.config_hash,
                "modes": [],
            }
        self.dataset = load_stage(self._resolve_dataset_path(self.config))
        self._lock = threading.Lock()

    def _resolve_dataset_path(self, config: PipelineConfig) -> PipelineConfig:
        """Try the config's dataset path as-is, then anchored at the artifacts."""
        raw = Path(config.dataset_path)
        candidates = [raw] if raw.is_absolute() else [raw, self.dir / raw, self.dir.parent / raw]
        for candidate in candidates:
            if candidate.exists():
                if candidate == raw:
                    return config
                return PipelineConfig.from_dict(
                    {**config.to_dict(), "dataset": {
                        "path": str(candidate),
                        "schema": config.schema,
                        "feature_columns": config.feature_columns,
                    }}
                )
        raise FailmapError(
            f"dataset {config.dataset_path!r} not found (tried {[str(c) for c in candidates]}); "
            "run the service from the directory the pipeline ran in"
        )

    def _check_provenance(self):
        for name in ("modes.json", "ensemble.json", "report.json", "status.json"):
            path = self.dir / name
            if not path.exists():
                continue
            doc = json.loads(path.read_text())
            other = doc.get("config_hash")
            if other is not None and other != self.config_hash:
                raise FailmapError(
                    f"artifact {name} has config hash {other[:12]}..., "
                    f"graph has {str(self.config_hash)[:12]}...; refusing mixed set"
                )
            if name == "status.json" and doc.get("status") == "failed":
                raise FailmapError(
                    f"artifact set is stale: run failed at stage {doc.get('stage')!r}"
                )

    def report_doc(self):
        path = self.dir / "report.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="no report artifact; run evaluate first")
        return json.loads(path.read_text())

    def add_selection(self, node_ids: list[int]) -> tuple[dict, list[str]]:
        with self._lock:
            existing = self.modes_doc["modes"]
            next_id = max((m["id"] for m in existing), default=-1) + 1
            mode = modes_mod.manual_select(
                self.graph,
                node_ids,
                self.dataset.meta,
                mode_id=next_id,
                task=self.config.task,
                tolerance=self.config.regression_tolerance,
                min_size=self.config.min_size,
                baseline_accuracy=self.config.baseline_accuracy,
            )
            warning_list = modes_mod.threshold_warnings(
                mode, self.config.min_size, self.config.baseline_accuracy
            )
            mode_doc = modes_mod.modes_to_dict([mode])["modes"][0]
            existing.append(mode_doc)
            (self.dir / "modes.json").write_text(canonical_json(self.modes_doc))
            return mode_doc, warning_list


def create_app(artifact_dir, ui_dir=None) -> FastAPI:
    store = ArtifactStore(artifact_dir)
    app = FastAPI(title="failmap explorer service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    @app.get("/api/graph")
    def get_graph():
        return store.graph_doc

    @app.get("/api/report")
    def get_report():
        return store.report_doc()

    @app.get("/api/modes")
    def get_modes():
        return store.modes_doc

    @app.get("/api/node/{node_id}/members")
    def get_node_members(node_id: int):
        try:
            node = store.graph.node_by_id(node_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown node id {node_id}")
        return {"id": node_id, "members": [int(r) for r in node.members]}

    @app.get("/api/modes/{mode_id}/diagnostics")
    def get_mode_diagnostics(mode_id: int, reference: str = "dataset", top_n: int = 5):
        from .diagnostics import rank_features

        by_id = {m["id"]: m for m in store.modes_doc["modes"]}
        if mode_id not in by_id:
            raise HTTPException(status_code=404, detail=f"unknown mode id {mode_id}")
        modes = {m.id: m for m in modes_mod.modes_from_dict(store.modes_doc)}
        ref_mode = None
        if reference != "dataset":
            try:
                ref_mode = modes[int(reference)]
            except (ValueError, KeyError):
                raise HTTPException(
                    status_code=400, detail=f"reference must be 'dataset' or a mode id, got {reference!r}"
                )
        report = rank_features(modes[mode_id], ref_mode, store.dataset, top_n=top_n)
        return {
            "mode_id": mode_id,
            "reference": report.group_b,
            "top_features": [
                {"column": c, "name": n, "ks": v} for c, n, v in report.ranking
            ],
        }

    @app.post("/api/selections", status_code=201)
    def post_selection(req: SelectionRequest):
        import warnings as warnings_mod

        try:
            with warnings_mod.catch_warnings():
                warnings_mod.simplefilter("ignore", modes_mod.ThresholdWarning)
                mode_doc, warning_list = store.add_selection(req.node_ids)
        except SelectionError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"mode": mode_doc, "warnings": warning_list}

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve(artifact_dir, bind: str = "127.0.0.1:8330", ui_dir=None):
    """Run the service with uvicorn; blocks until interrupted."""
    import uvicorn

    host, _, port = bind.partition(":")
    app = create_app(artifact_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8330), log_level="info")
