"""Record a real service session for the frontend round-trip test.

Drives the HTTP API through create -> three reference-consistent decisions
-> undo, and stores every request/response pair. The frontend test replays
these payloads through a fetch stub, so the UI is checked against genuine
service traffic. Rerun after changing the engine, fixtures, or StateView.

Run from the repo root:  python3 tools/record_ui_fixture.py
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi.testclient import TestClient

from plsq.corpus import load_cache_dir, load_corpus
from plsq.evalsim import assign_gold_labels, reference_candidate
from plsq.llm import validate_candidates
from plsq.service import create_app

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "frontend" / "test" / "fixtures" / "session.json"

TASK_ID = "films-review"
TARGET_GOLD = 0
DECISIONS = 3


def main():
    corpus = load_corpus(ROOT / "fixtures" / "corpus.json")
    caches = load_cache_dir(ROOT / "fixtures" / "caches")
    task = corpus.task(TASK_ID)
    candidates = validate_candidates(caches[TASK_ID], task.db)
    assignment = assign_gold_labels(candidates, task)
    reference = reference_candidate(candidates, assignment, TARGET_GOLD)
    reference_features = sorted(f.display for f in reference.features)

    client = TestClient(create_app(corpus, caches))
    steps = []

    create_request = {"task_id": TASK_ID}
    view = client.post("/sessions", json=create_request).json()
    steps.append({
        "method": "POST", "path": "/sessions",
        "request": create_request, "response": view,
    })

    for _ in range(DECISIONS):
        variable = view["variables"][0]
        choice = "yes" if _reference_carries(view, reference, variable) else "no"
        request = {"version": view["version"], "variable_id": variable["id"],
                   "choice": choice}
        response = client.post(f"/sessions/{view['session_id']}/decision", json=request)
        assert response.status_code == 200, response.text
        new_view = response.json()
        steps.append({
            "method": "POST",
            "path": f"/sessions/{view['session_id']}/decision",
            "request": request, "response": new_view,
        })
        view = new_view

    request = {"version": view["version"]}
    response = client.post(f"/sessions/{view['session_id']}/undo", json=request)
    assert response.status_code == 200, response.text
    steps.append({
        "method": "POST",
        "path": f"/sessions/{view['session_id']}/undo",
        "request": request, "response": response.json(),
    })

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"task_id": TASK_ID, "steps": steps}, indent=2) + "\n")
    print(f"recorded {len(steps)} exchanges to {OUT}")


def _reference_carries(view, reference, variable) -> bool:
    ref_view = next(c for c in view["candidates"] if c["id"] == reference.id)
    return all(f in ref_view["features"] for f in variable["features"])


if __name__ == "__main__":
    main()
