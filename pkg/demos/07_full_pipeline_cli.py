"""The full pipeline through the `af` CLI with a mock model.

perturb -> generate -> dataset build -> run -> metrics, all against a scripted
playbook, with the response cache making the second run free. Mirrors how a
real run would look with hosted endpoints in the registry.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

work = Path(tempfile.mkdtemp())

(work / "objects.json").write_text(json.dumps({
    "kind": "object",
    "categories": {"Animals": ["cat", "dog"], "Only-bench": ["bench"],
                   "Only-crowd": ["crowd"]},
}))
(work / "relations.json").write_text(json.dumps({
    "kind": "relation",
    "categories": {"Intransitive Actions": ["walking", "sitting"], "Only-near": ["near"]},
}))

triplets = [
    {"id": f"t{i}", "source_object": "cat", "relation": "near", "target_object": "crowd",
     "video": {"id": f"v{i}", "source": "demo", "frames": []}}
    for i in range(4)
]
(work / "triplets.jsonl").write_text("\n".join(json.dumps(t) for t in triplets) + "\n")

answerable = [
    {"id": f"a{i}", "video": {"id": f"av{i}", "source": "demo", "frames": []},
     "question": "What is parked outside?", "gt_answer": "a red car", "k": 1}
    for i in range(4)
]
(work / "answerable.jsonl").write_text("\n".join(json.dumps(a) for a in answerable) + "\n")

(work / "playbook.json").write_text(json.dumps([
    {"match": "with 'dog'",
     "completion": "VERDICT: ok\nQUESTION: What is the dog doing in the video?\n"
                   "ANSWER: The question is unanswerable because the video does not show dog."},
    {"match": "What is the dog doing",
     "completion": "The question is unanswerable because the video does not show dog."},
    {"match": "What is parked", "completion": "a red car"},
    {"match": ".*", "completion": "no idea"},
]))


def af(*args: str) -> dict:
    cmd = [sys.executable, "-m", "answerability.cli", *args]
    proc = subprocess.run(cmd, capture_output=True, text=True, check=True)
    print(f"$ af {' '.join(args)}")
    print(f"  {proc.stdout.strip()}")
    return json.loads(proc.stdout)


cache = work / "cache"
af("--seed", "9", "perturb",
   "--triplets", str(work / "triplets.jsonl"),
   "--object-table", str(work / "objects.json"),
   "--relation-table", str(work / "relations.json"),
   "--out", str(work / "altered.jsonl"))
af("--seed", "9", "--mock", str(work / "playbook.json"), "--cache-dir", str(cache),
   "generate", "--alterations", str(work / "altered.jsonl"),
   "--out", str(work / "outcomes.jsonl"), "--dataset-out", str(work / "generated.jsonl"))

# tiny pools: 1 item per unanswerability kind is not reachable here (objects only),
# so build a 2-item-per-side set directly from the generated pool plus answerables
generated = [json.loads(l) for l in (work / "generated.jsonl").read_text().splitlines()]
print(f"generated {len(generated)} unanswerable items; building an eval file directly")
eval_items = generated[:2] + answerable[:2]
(work / "eval.jsonl").write_text("\n".join(json.dumps(i) for i in eval_items) + "\n")

af("--mock", str(work / "playbook.json"), "--cache-dir", str(cache),
   "run", "--dataset", str(work / "eval.jsonl"), "--judge", "rules",
   "--out", str(work / "run.jsonl"))
summary = af("metrics", "--pre", str(work / "run.jsonl"), "--post", str(work / "run.jsonl"),
             "--dataset", str(work / "eval.jsonl"), "--out", str(work / "report"))

print()
print(f"accuracy {summary['s_acc']:.2f}, alignment {summary['s_align']}, "
      f"F1 {summary['f1']:.2f}")
print(f"cache entries: {af('--cache-dir', str(cache), 'cache', 'stats')['entries']}")
