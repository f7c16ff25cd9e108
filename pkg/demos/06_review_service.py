"""Driving the human-curation review service over HTTP.

Starts the service in-process on a local port, walks the queue as annotator
"demo" (pass/filtered decisions plus one 0-5 rating), exports the curated
subset, then restarts the store to show the log replay rebuilding state.
"""

import json
import tempfile
import threading
import time
from pathlib import Path

import requests
import uvicorn

from answerability.corpus import CategorizedLabel, QAItem, TripletDescription, VideoRef
from answerability.perturb import Alteration, AlteredDescription
from answerability.review import ReviewItem, ReviewStore, create_app

workdir = Path(tempfile.mkdtemp())
log_path = workdir / "decisions.jsonl"


def make_item(i: int) -> ReviewItem:
    provenance = AlteredDescription(
        base_id=f"t{i}",
        altered=TripletDescription(
            source_object=CategorizedLabel("dog", "Animals"),
            relation=CategorizedLabel("walking", "Intransitive Actions"),
            target_object=CategorizedLabel("pedestrians", "Independent Actors"),
        ),
        alteration=Alteration(kind="source_object", original="cat", replacement="dog",
                              category="Animals"),
    )
    item = QAItem(
        id=f"u{i}",
        video=VideoRef(id=f"v{i}", source_dataset="demo"),
        question="What is the dog doing in the video?",
        gt_answer="The question is unanswerable because the video does not show a dog.",
        k=-1, unanswerability_kind="object", provenance=provenance,
    )
    return ReviewItem(item=item, original_description="cat walking pedestrians", frames=())


def fresh_queue() -> list[ReviewItem]:
    return [make_item(i) for i in range(5)]


store = ReviewStore(fresh_queue(), log_path)
app = create_app(store)
config = uvicorn.Config(app, host="127.0.0.1", port=8901, log_level="error")
server = uvicorn.Server(config)
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.05)

base = "http://127.0.0.1:8901"
verdicts = ["pass", "pass", "filtered", "pass", "filtered"]
for verdict in verdicts:
    item = requests.get(f"{base}/api/queue/next", params={"annotator": "demo"}).json()["item"]
    ack = requests.post(f"{base}/api/decisions", json={
        "item_id": item["item"]["id"], "verdict": verdict, "annotator": "demo",
    }).json()
    print(f"decided {item['item']['id']}: {verdict} "
          f"(pending {ack['progress']['pending']})")

requests.post(f"{base}/api/ratings", json={
    "item_id": "u0", "rubric": "unanswerable", "score": 5, "annotator": "demo",
})
print("progress:", json.dumps(requests.get(f"{base}/api/progress").json(), indent=2))

curated = workdir / "curated.jsonl"
n = store.export_curated(curated)
print(f"exported {n} pass items -> {curated}")

server.should_exit = True
thread.join(timeout=5)

# A fresh store over the same log reconstructs identical statuses.
restarted = ReviewStore(fresh_queue(), log_path)
statuses = {i: r.status for i, r in restarted.by_id.items()}
print("replayed statuses:", statuses)
