"""Run the blinded rating service and script a reviewer session against it.

Tasks never reveal which model produced a sentence; the export CSV
re-attaches provenance for analysis. The same flow drives the browser
client in frontend/.
"""

import tempfile
import threading
import time
from pathlib import Path

import requests
import uvicorn

from voxsynth.ratings import parse_ratings_csv, summarize
from voxsynth.review import Study, StudyItem, create_app, save_study

study_dir = Path(tempfile.mkdtemp(prefix="review_demo_")) / "demo-study"
items = [
    StudyItem(
        item_id=f"it{i:02d}",
        target_text=f"jumla ta {i} a cikin harshe",
        english_text=f"sentence {i} in the language",
        model_id=["model-a", "model-b"][i % 2],
    )
    for i in range(8)
]
save_study(
    Study(
        study_id="demo-study", modality="text", metrics_schema="text_five",
        items=items, raters=["linguist-1"], shuffle_seed=3,
    ),
    study_dir,
)

app = create_app([study_dir])
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=8791, log_level="error"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.02)
base = "http://127.0.0.1:8791"

while True:
    task = requests.get(f"{base}/studies/demo-study/next", params={"rater": "linguist-1"}).json()
    if task["done"]:
        break
    print(f"rating {task['item_id']}: {task['payload']['target_text']!r}"
          f"  (model hidden: {'model' not in str(task['payload'])})")
    requests.post(
        f"{base}/studies/demo-study/ratings",
        json={
            "item_id": task["item_id"], "rater_id": "linguist-1", "modality": "text",
            "readability": 4 + int(task["item_id"][-1]) % 4, "grammatical": 1,
            "real_words": 1, "notable_error": 0, "adequacy": 5,
        },
    ).raise_for_status()

export = requests.get(f"{base}/studies/demo-study/export.csv").text
records = parse_ratings_csv(export)
print(f"\nexported {len(records)} ratings; provenance restored at export:")
for model, metrics in summarize(records).items():
    mean, std, n = metrics["readability"]
    print(f"  {model}: readability {mean:.2f} ± {std:.2f} over {n} items")

server.should_exit = True
thread.join(timeout=5)
