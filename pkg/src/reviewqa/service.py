"""HTTP wire API for the annotation store.

Endpoints (all JSON, schema version 1):

    GET  /tasks/next?worker=ID   next task for the worker
    POST /questions              {task_id, worker, question_text}
    POST /annotations            {task_id, worker, question_subj_score,
                                  answer: null | {byte_start, byte_end},
                                  answer_subj_score}
    GET  /progress               counts and active worker tally
    GET  /review/{id}            review text plus token byte boundaries

Byte offsets in submitted spans refer to the UTF-8 bytes of the review
text exactly as served by /review/{id}.  Gold labels never leave the
server; clients cannot tell quality-control tasks apart from real ones.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .corpus import token_boundaries
from .store import AnnotationStore, StoreError
from .tasks import Annotation, QuestionTask, Span, SpanTask

SCHEMA_VERSION = 1

_HTTP_STATUS = {
    "WORKER_DEACTIVATED": 403,
    "TASK_MISMATCH": 409,
    "SPAN_OUT_OF_RANGE": 400,
    "SCORE_RANGE": 400,
    "INCOMPLETE": 400,
}


def _task_payload(task) -> dict:
    if isinstance(task, QuestionTask):
        return {
            "version": SCHEMA_VERSION,
            "kind": "question",
            "task_id": task.task_id,
            "review_id": task.review_id,
            "topic": {"opinion": task.opinion, "aspect": task.aspect},
            "instructions_version": task.instructions_version,
        }
    assert isinstance(task, SpanTask)
    # deliberately omits gold fields
    return {
        "version": SCHEMA_VERSION,
        "kind": "span",
        "task_id": task.task_id,
        "review_id": task.review_id,
        "question_text": task.question_text,
    }


def _error(code: str, detail: str) -> JSONResponse:
    return JSONResponse(
        status_code=_HTTP_STATUS.get(code, 400),
        content={"version": SCHEMA_VERSION, "error": code, "detail": detail},
    )


def create_app(store: AnnotationStore) -> FastAPI:
    app = FastAPI(title="reviewqa annotation service")

    @app.get("/tasks/next")
    def next_task(worker: str):
        try:
            task = store.next_task(worker)
        except StoreError as err:
            return _error(err.code, str(err))
        if task is None:
            return {"version": SCHEMA_VERSION, "status": "NO_TASKS"}
        return _task_payload(task)

    @app.post("/questions")
    async def submit_question(request: Request):
        body = await request.json()
        try:
            ack = store.submit_question(
                worker_id=body["worker"],
                task_id=body["task_id"],
                question_text=body.get("question_text", ""),
            )
        except StoreError as err:
            return _error(err.code, str(err))
        return {"version": SCHEMA_VERSION, "status": "ok", "revision": ack.revision}

    @app.post("/annotations")
    async def submit_annotation(request: Request):
        body = await request.json()
        answer = body.get("answer")
        try:
            span = (
                None
                if answer is None
                else Span(int(answer["byte_start"]), int(answer["byte_end"]))
            )
        except (KeyError, TypeError, ValueError) as err:
            return _error("SPAN_OUT_OF_RANGE", f"malformed answer span: {err}")
        annotation = Annotation(
            task_id=body["task_id"],
            worker_id=body["worker"],
            question_subj_score=body.get("question_subj_score"),
            answer=span,
            answer_subj_score=body.get("answer_subj_score"),
        )
        try:
            ack = store.submit_annotation(body["worker"], annotation)
        except StoreError as err:
            return _error(err.code, str(err))
        return {"version": SCHEMA_VERSION, "status": "ok", "revision": ack.revision}

    @app.get("/progress")
    def progress():
        return {"version": SCHEMA_VERSION, **store.progress()}

    @app.get("/worker/{worker_id}")
    def worker_status(worker_id: str):
        status = store.worker_status(worker_id)
        if status is None:
            return {
                "version": SCHEMA_VERSION,
                "worker_id": worker_id,
                "known": False,
                "active": True,
                "completed": 0,
            }
        return {
            "version": SCHEMA_VERSION,
            "worker_id": worker_id,
            "known": True,
            "active": status.active,
            "gold_seen": status.gold_seen,
            "gold_correct": status.gold_correct,
            "completed": store.worker_completed(worker_id),
        }

    @app.get("/review/{review_id}")
    def review(review_id: str):
        if review_id not in store.reviews:
            return JSONResponse(
                status_code=404,
                content={
                    "version": SCHEMA_VERSION,
                    "error": "NOT_FOUND",
                    "detail": f"unknown review {review_id}",
                },
            )
        r = store.reviews.get(review_id)
        return {
            "version": SCHEMA_VERSION,
            "review_id": r.review_id,
            "domain": r.domain,
            "text": r.text,
            "tokens": token_boundaries(r.text),
        }

    return app


def serve(store: AnnotationStore, host: str = "127.0.0.1", port: int = 8787) -> None:
    import uvicorn

    uvicorn.run(create_app(store), host=host, port=port, log_level="warning")
