"""Exercises the evotopic extension end to end on a synthetic corpus."""

import json
import math
import pathlib
import sys
import tempfile

import evotopic

SCHEMA = pathlib.Path(__file__).resolve().parent.parent / "crates/core/schemas/topics.schema.json"


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name}{': ' + detail if detail else ''}")
    if not ok:
        check.failed = True


check.failed = False

check("tokenize", evotopic.tokenize("Graph-based Topic models, 2021!") == ["graph", "based", "topic", "models"])

corpus, embeddings, truth = evotopic.synth(json.dumps({"seed": 11, "windows": 3}))
check("synth sizes", len(corpus) == embeddings.shape[0] == len(truth["documents"]))

START = 1_577_836_800
windows = evotopic.segment(corpus, length_days=30, overlap_days=10, origin=START)
check("segment", len(windows) == 3, f"{len(windows)} windows")

evt1 = embeddings.to_evt1()
check("EVT1 round trip", evt1[:4] == b"EVT1" and evotopic.Embeddings.from_evt1(evt1).tolist() == embeddings.tolist())

theta = 0.7
rot = [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
moving = [[float(i), float(i * i % 7)] for i in range(6)]
reference = [[x * rot[0][0] + y * rot[1][0] + 3.0, x * rot[0][1] + y * rot[1][1] - 1.0] for x, y in moving]
r, b, residual = evotopic.procrustes(reference, moving)
check("procrustes", residual < 1e-9 and abs(b[0] - 3.0) < 1e-9 and abs(r[0][1] - rot[0][1]) < 1e-9)

blobs = [[0.0 + 0.01 * i, 0.0] for i in range(8)] + [[10.0 + 0.01 * i, 0.0] for i in range(8)] + [[50.0, 50.0]]
labels = evotopic.hdbscan(blobs, min_cluster_size=4)
check("hdbscan", labels == [0] * 8 + [1] * 8 + [-1], str(labels))

docs = [["a", "b"], ["a", "b"], ["c"], ["a", "c"]]
p_a, p_b, p_ab = 3 / 4, 2 / 4, 2 / 4
expected = math.log(p_ab / (p_a * p_b)) / -math.log(p_ab)
check("npmi", abs(evotopic.npmi("a", "b", docs) - expected) < 1e-12)
check("diversity", evotopic.diversity([["a", "b"], ["b", "c"]]) == 0.75)
check("coherence", abs(evotopic.coherence([["a", "b"]], docs) - expected) < 1e-12)
check("ari", evotopic.ari([0, 0, 1, 1], [5, 5, 7, 7]) == 1.0)

config = evotopic.Config(overrides={
    "window.length_days": "30",
    "window.overlap_days": "10",
    "window.origin": "2020-01-01T00:00:00Z",
    "cluster.min_cluster_size": "10",
})
try:
    config.set("cluster.colour", "3")
    check("unknown key rejected", False)
except evotopic.ConfigError:
    check("unknown key rejected", True)

bundle = evotopic.run(config, corpus, embeddings, threads=2)
again = evotopic.run(config, corpus, embeddings, threads=1)
check("run", len(bundle.windows) == 3 and len(bundle.topics) == 2, repr(bundle))
check("thread-independent hash", bundle.content_hash == again.content_hash and bundle.verify())

truth_chain = {d["id"]: d["chain"] for d in truth["documents"]}
ids = corpus.ids
pred, gold = [], []
topic_of = {}
for topic in bundle.topics:
    for part in topic["parts"]:
        topic_of[(part["window"], part["local_id"])] = topic["id"]
for cluster in bundle.local_clusters:
    for m in cluster["members"]:
        pred.append(topic_of[(cluster["window"], cluster["local_id"])])
        gold.append(truth_chain[ids[m]])
check("recovered chains", evotopic.ari(pred, gold) > 0.99)

with tempfile.TemporaryDirectory() as out:
    bundle.export(out)
    loaded = evotopic.Bundle.load(pathlib.Path(out) / "bundle.json")
    check("export and reload", loaded.content_hash == bundle.content_hash and loaded.verify())
    topics_json = json.loads((pathlib.Path(out) / "topics.json").read_text())
    try:
        import jsonschema

        jsonschema.validate(topics_json, json.loads(SCHEMA.read_text()))
        check("topics.json schema", True)
    except ImportError:
        print("skip topics.json schema: jsonschema not installed")

sys.exit(1 if check.failed else 0)
