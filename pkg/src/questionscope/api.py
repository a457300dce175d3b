"""Annotation service: serves sampled articles with model prelabels, records
gold units with optimistic versioning, and reports live progress and agreement.

Storage is the same JSONL the batch pipeline consumes: units persist to
annotation/gold_units.jsonl under the pipeline output directory, so the
offline `eval` command runs on the exact files this service writes.
"""
import json
import logging
import os
import threading
from typing import Dict, List, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import pipeline
from .config import PipelineConfig
from .corpus import DataError
from .jsonl import read_jsonl, write_jsonl
from .triangulate import (
    ADDRESSEES,
    FORMS,
    GoldUnit,
    INTERACTIONAL_CONTEXTS,
    MACRO_AXES,
    compute_agreement,
)
from .providers import STANCE_LABELS

log = logging.getLogger(__name__)

ANNOTATION_DIR = "annotation"
STATE_FILE = "state.json"
UNITS_FILE = "gold_units.jsonl"


class UnitDraft(BaseModel):
    unit_id: str
    start: int
    end: int
    text: str
    interactional_context: str
    addressee: str
    form: str
    function: str
    macro_axes: List[str] = Field(default_factory=list)
    answer_realized: bool


class SaveRequest(BaseModel):
    annotator: str
    base_version: int
    units: List[UnitDraft]


def _validate_unit(draft: UnitDraft, article_id: str, annotator: str) -> GoldUnit:
    """Field-level validation; raises HTTPException(422) naming the field."""
    errors = []
    if not 0 <= draft.start < draft.end:
        errors.append({"field": "start", "message": "span must satisfy 0 <= start < end"})
    if draft.interactional_context not in INTERACTIONAL_CONTEXTS:
        errors.append({"field": "interactional_context",
                       "message": f"must be one of {list(INTERACTIONAL_CONTEXTS)}"})
    if draft.addressee not in ADDRESSEES:
        errors.append({"field": "addressee", "message": f"must be one of {list(ADDRESSEES)}"})
    if draft.form not in FORMS:
        errors.append({"field": "form", "message": f"must be one of {list(FORMS)}"})
    if draft.function not in STANCE_LABELS:
        errors.append({"field": "function", "message": f"must be one of {list(STANCE_LABELS)}"})
    if not 1 <= len(draft.macro_axes) <= 2:
        errors.append({"field": "macro_axes", "message": "choose 1 or 2 macro axes"})
    for axis in draft.macro_axes:
        if axis not in MACRO_AXES:
            errors.append({"field": "macro_axes", "message": f"unknown axis {axis!r}"})
    if errors:
        raise HTTPException(status_code=422, detail={"unit_id": draft.unit_id, "errors": errors})
    return GoldUnit(
        article_id=article_id,
        unit_id=draft.unit_id,
        annotator_id=annotator,
        start=draft.start,
        end=draft.end,
        text=draft.text,
        interactional_context=draft.interactional_context,
        addressee=draft.addressee,
        form=draft.form,
        function=draft.function,
        macro_axes=tuple(draft.macro_axes),
        answer_realized=draft.answer_realized,
    )


class AnnotationStore:
    """Task assignments, per-(task, annotator) version counters, and the
    persisted unit file, guarded by a process-wide lock."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.dir = os.path.join(cfg.out_dir, ANNOTATION_DIR)
        os.makedirs(self.dir, exist_ok=True)
        self.lock = threading.Lock()
        self.articles = {a["article_id"]: a for a in pipeline._load_articles(cfg)}
        self.predictions = {}
        pred_path = os.path.join(cfg.out_dir, pipeline.PREDICTIONS)
        if os.path.exists(pred_path):
            for row in read_jsonl(pred_path):
                self.predictions.setdefault(row["article_id"], []).append(row)
        self.tasks = self._load_or_init_tasks()
        self.units: Dict[str, List[GoldUnit]] = {}  # key "task_id:annotator"
        units_path = os.path.join(self.dir, UNITS_FILE)
        if os.path.exists(units_path):
            for row in read_jsonl(units_path):
                unit = GoldUnit.from_dict({k: v for k, v in row.items() if k != "task_id"})
                self.units.setdefault(f"{row['task_id']}:{unit.annotator_id}", []).append(unit)

    def _load_or_init_tasks(self) -> List[Dict]:
        state_path = os.path.join(self.dir, STATE_FILE)
        if os.path.exists(state_path):
            with open(state_path, encoding="utf-8") as f:
                return json.load(f)["tasks"]
        manifest = list(read_jsonl(pipeline._require(self.cfg, pipeline.SAMPLE)))
        tasks = []
        for ordinal, row in enumerate(manifest):
            if row["component"] == "double":
                annotators = ["A", "B"]
            elif row["component"] == "extension-A":
                annotators = ["A"]
            elif row["component"] == "extension-B":
                annotators = ["B"]
            else:
                annotators = ["A" if ordinal % 2 == 0 else "B"]
            tasks.append(
                {
                    "task_id": ordinal,
                    "article_id": row["article_id"],
                    "component": row["component"],
                    "annotators": annotators,
                    "status": {a: "pending" for a in annotators},
                    "version": {a: 0 for a in annotators},
                }
            )
        return tasks

    def _persist(self) -> None:
        state_path = os.path.join(self.dir, STATE_FILE)
        tmp = state_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump({"tasks": self.tasks}, f, ensure_ascii=False, sort_keys=True, indent=2)
            f.write("\n")
        os.replace(tmp, state_path)
        rows = []
        for key in sorted(self.units):
            task_id = int(key.split(":")[0])
            for unit in self.units[key]:
                row = unit.to_dict()
                row["task_id"] = task_id
                rows.append(row)
        rows.sort(key=lambda r: (r["article_id"], r["annotator_id"], r["start"], r["unit_id"]))
        write_jsonl(os.path.join(self.dir, UNITS_FILE), rows)

    def task_or_404(self, task_id: int) -> Dict:
        if not 0 <= task_id < len(self.tasks):
            raise HTTPException(status_code=404, detail="unknown task")
        return self.tasks[task_id]

    def task_complete(self, task: Dict) -> bool:
        return all(s == "complete" for s in task["status"].values())


def create_app(cfg: PipelineConfig, ui_dir: Optional[str] = None) -> FastAPI:
    store = AnnotationStore(cfg)
    app = FastAPI(title="questionscope annotation service")

    def public_task(task: Dict) -> Dict:
        return {
            "task_id": task["task_id"],
            "article_id": task["article_id"],
            "component": task["component"],
            "annotators": task["annotators"],
            "status": task["status"],
            "version": task["version"],
        }

    @app.get("/api/tasks/next")
    def next_task(annotator: str = Query(...)):
        with store.lock:
            for task in store.tasks:
                if annotator not in task["annotators"]:
                    continue
                if task["status"][annotator] == "in-progress":
                    return {"state": "task", "task": public_task(task)}
                if task["status"][annotator] == "pending":
                    task["status"][annotator] = "in-progress"
                    store._persist()
                    return {"state": "task", "task": public_task(task)}
            return {"state": "done", "task": None}

    @app.get("/api/articles/{article_id}")
    def get_article(article_id: str):
        art = store.articles.get(article_id)
        if art is None:
            raise HTTPException(status_code=404, detail="unknown article")
        return {
            "article_id": article_id,
            "text": art["text"],
            "sentences": [
                {"sent_id": sid, "start": start, "end": end,
                 "text": art["text"][start:end]}
                for sid, start, end in art["offsets"]
            ],
            "prelabels": store.predictions.get(article_id, []),
        }

    @app.post("/api/tasks/{task_id}/units")
    def save_units(task_id: int, req: SaveRequest):
        with store.lock:
            task = store.task_or_404(task_id)
            if req.annotator not in task["annotators"]:
                raise HTTPException(status_code=403, detail="task not assigned to this annotator")
            if task["status"][req.annotator] == "pending":
                raise HTTPException(status_code=409, detail="task not started; request it first")
            current = task["version"][req.annotator]
            if req.base_version != current:
                raise HTTPException(
                    status_code=409,
                    detail={"message": "stale version", "current_version": current},
                )
            units = [_validate_unit(d, task["article_id"], req.annotator)
                     for d in req.units]
            store.units[f"{task_id}:{req.annotator}"] = units
            task["version"][req.annotator] = current + 1
            task["status"][req.annotator] = "complete"
            store._persist()
            return {"version": current + 1, "n_units": len(units)}

    @app.get("/api/tasks/{task_id}/units")
    def get_units(task_id: int, annotator: str = Query(...)):
        with store.lock:
            task = store.task_or_404(task_id)
            if annotator not in task["annotators"]:
                raise HTTPException(status_code=403, detail="task not assigned to this annotator")
            own = [u.to_dict() for u in store.units.get(f"{task_id}:{annotator}", [])]
            others = {}
            if store.task_complete(task):
                for other in task["annotators"]:
                    if other != annotator:
                        others[other] = [
                            u.to_dict()
                            for u in store.units.get(f"{task_id}:{other}", [])
                        ]
            return {
                "units": own,
                "version": task["version"][annotator],
                "other_annotators": others,
                "blinded": not store.task_complete(task),
            }

    @app.get("/api/agreement")
    def agreement():
        with store.lock:
            complete = {}
            pending_double = 0
            for task in store.tasks:
                if task["component"] != "double":
                    continue
                if store.task_complete(task):
                    a, b = sorted(task["annotators"])
                    complete[task["article_id"]] = (
                        store.units.get(f"{task['task_id']}:{a}", []),
                        store.units.get(f"{task['task_id']}:{b}", []),
                    )
                else:
                    pending_double += 1
            if not complete:
                return {"state": "insufficient data", "n_complete_double": 0}
            try:
                report = compute_agreement(complete)
            except DataError as e:
                return {"state": "insufficient data", "n_complete_double": len(complete),
                        "message": str(e)}
            return {
                "state": "ok",
                "partial": pending_double > 0,
                "n_articles": report.n_articles,
                "n_matched_units": report.n_matched_units,
                "jaccard_overlap": report.jaccard_overlap,
                "label_accuracy": report.label_accuracy,
                "kappa": report.kappa,
                "confusion": report.confusion,
            }

    @app.get("/api/progress")
    def progress():
        with store.lock:
            by_component: Dict[str, Dict[str, int]] = {}
            for task in store.tasks:
                c = by_component.setdefault(task["component"],
                                            {"pending": 0, "in-progress": 0, "complete": 0})
                if store.task_complete(task):
                    c["complete"] += 1
                elif any(s != "pending" for s in task["status"].values()):
                    c["in-progress"] += 1
                else:
                    c["pending"] += 1
            return {
                "n_tasks": len(store.tasks),
                "by_component": by_component,
                "n_units": sum(len(v) for v in store.units.values()),
            }

    ui = ui_dir or os.environ.get("QS_UI_DIR") or os.path.join("frontend", "dist")
    if os.path.isdir(ui):
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")
    return app
