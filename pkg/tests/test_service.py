import json
import random
import time
from datetime import datetime, timedelta

import pytest
from starlette.testclient import TestClient

from conftest import SCHEMA, planted_cohort_pair, random_log
from magpath.eventlog import Event, EventLog
from magpath.service import ServiceConfig, create_app

CSV_HEADER = "case,date,act,occ,unit\n"
CSV_BODY = CSV_HEADER + "".join(
    f"p{c},2014-01-{d + 1:02d},ACT{d % 3},occ{c % 2},u{c % 2}\n"
    for c in range(4) for d in range(3 + c % 2))

PARSE = {"case_column": "case", "time_column": "date",
         "perspective_columns": {"intervention": "act", "occupation": "occ",
                                 "unit": "unit"}}


@pytest.fixture()
def client(tmp_path):
    app = create_app(ServiceConfig(data_dir=str(tmp_path / "data")))
    with TestClient(app) as c:
        yield c


def upload_csv(client, name="demo", content=CSV_BODY):
    return client.post("/datasets", json={
        "name": name, "format": "csv", "content": content, "parse": PARSE})


def upload_log(client, log: EventLog, name: str):
    response = client.post("/datasets", json={
        "name": name, "format": "jsonl", "content": log.to_jsonl()})
    assert response.status_code == 201, response.text
    return response.json()["id"]


def poll_job(client, job, timeout=120.0):
    deadline = time.monotonic() + timeout
    while job["state"] in ("queued", "running"):
        assert time.monotonic() < deadline, f"job stuck: {job}"
        time.sleep(0.05)
        job = client.get(f"/jobs/{job['id']}").json()
    return job


def grouped_log():
    """Two groups of mutually identical pathways, far apart in both
    activities and tempo -- clusters the detector cannot miss."""
    events = []
    row = 0
    for k in range(4):
        for d in range(3):
            events.append(Event(f"a{k}", datetime(2014, 1, 1) + timedelta(days=7 * d),
                                {"intervention": "ANC", "occupation": "gp",
                                 "unit": "clinic"}, row=row))
            row += 1
    for k in range(4):
        for d in range(3):
            events.append(Event(f"b{k}", datetime(2014, 1, 1) + timedelta(days=50 * d),
                                {"intervention": "XR", "occupation": "rad",
                                 "unit": "lab"}, row=row))
            row += 1
    return EventLog(SCHEMA, events)


# -- datasets --------------------------------------------------------


def test_upload_and_stats(client):
    response = upload_csv(client)
    assert response.status_code == 201
    info = response.json()
    assert info["cases"] == 4 and info["events"] == 14
    assert info["schema"] == ["intervention", "occupation", "unit"]

    stats = client.get(f"/datasets/{info['id']}/stats")
    assert stats.status_code == 200
    body = stats.json()
    assert body["lengths"]["count"] == 4
    assert body["lengths"]["median"] == 3.5


def test_upload_idempotent_and_name_conflicts(client):
    first = upload_csv(client).json()
    again = upload_csv(client)
    assert again.status_code == 201 and again.json()["id"] == first["id"]

    clash = upload_csv(client, content=CSV_BODY.replace("ACT0", "ZZZ9"))
    assert clash.status_code == 409
    assert clash.json()["error"]["code"] == "duplicate_name"

    alias = upload_csv(client, name="other")
    assert alias.status_code == 201 and alias.json()["id"] == first["id"]
    names = {d["name"] for d in client.get("/datasets").json()["datasets"]}
    assert names == {"demo", "other"}


def test_malformed_upload_payload(client):
    response = client.post("/datasets", json={"format": "csv"})
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "bad_payload"

    response = client.post("/datasets", json={
        "name": "x", "format": "csv", "content": CSV_BODY})  # no parse config
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "invalid_params"


def test_unknown_dataset_is_404(client):
    response = client.get("/datasets/ffffffffffffffff/stats")
    assert response.status_code == 404
    assert response.json()["error"]["code"] == "unknown_id"


def test_malformed_rows_counted(client):
    content = CSV_HEADER + "p1,2014-01-01,A,o,u\np2,not-a-date,A,o,u\n"
    response = upload_csv(client, content=content)
    assert response.status_code == 201
    assert response.json()["malformed"] == 1
    assert response.json()["events"] == 1


# -- cohort filtering ------------------------------------------------


def test_filter_preview_and_apply(client):
    cohort, control = planted_cohort_pair()
    cohort_id = upload_log(client, cohort, "cohort")
    control_id = upload_log(client, control, "control")

    preview = client.post(f"/datasets/{cohort_id}/filter/preview",
                          json={"control": control_id})
    assert preview.status_code == 200
    body = preview.json()
    assert body["typical_procedures"] == ["P_RARE6"]
    assert body["typical_occupations"] == ["O_RARE10"]
    assert body["passing_events"] > 0
    assert len(body["sample"]) == 10

    applied = client.post(f"/datasets/{cohort_id}/filter/apply",
                          json={"control": control_id, "name": "filtered"})
    assert applied.status_code == 201
    out = applied.json()
    assert out["events"] == body["passing_events"]
    filtered = client.get(f"/datasets/{out['id']}/stats")
    assert filtered.json()["events"] == body["passing_events"]
    names = {d["name"] for d in client.get("/datasets").json()["datasets"]}
    assert "filtered" in names


def test_filter_preview_against_missing_control(client):
    cohort_id = upload_csv(client).json()["id"]
    response = client.post(f"/datasets/{cohort_id}/filter/preview",
                           json={"control": "0123456789abcdef"})
    assert response.status_code == 404


# -- MAG building ----------------------------------------------------


def test_mag_creation(client):
    dataset = upload_csv(client).json()
    response = client.post(f"/datasets/{dataset['id']}/mag",
                           json={"aspects": ["intervention", "occupation", "unit"]})
    assert response.status_code == 201
    info = response.json()
    assert info["aspects"] == ["intervention", "occupation", "unit", "Sequence"]
    assert info["patients"] == 4
    assert info["edges"] == 14 + 4  # one per consecutive pair plus endpoint wraps

    bad = client.post(f"/datasets/{dataset['id']}/mag",
                      json={"aspects": ["bogus"]})
    assert bad.status_code == 400
    assert bad.json()["error"]["code"] == "invalid_params"


# -- jobs: matrix + clustering + profile -----------------------------


def make_mag(client, log, name):
    dataset_id = upload_log(client, log, name)
    response = client.post(f"/datasets/{dataset_id}/mag",
                           json={"aspects": list(SCHEMA)})
    assert response.status_code == 201
    return response.json()["id"]


def test_matrix_and_cluster_pipeline(client):
    mag_id = make_mag(client, grouped_log(), "grouped")

    started = client.post(f"/mags/{mag_id}/matrix", json={})
    assert started.status_code == 202
    job = poll_job(client, started.json())
    assert job["state"] == "done", job
    assert job["progress"] == 1.0
    matrix_id = job["result"]

    # identical request -> identical artifact (content addressing)
    job2 = poll_job(client, client.post(f"/mags/{mag_id}/matrix", json={}).json())
    assert job2["result"] == matrix_id

    clustered = client.post(f"/matrices/{matrix_id}/clusters",
                            json={"runs": 8, "seeds": 3})
    assert clustered.status_code == 202
    cjob = poll_job(client, clustered.json())
    assert cjob["state"] == "done", cjob

    profile = client.get(f"/clusters/{cjob['result']}/profile")
    assert profile.status_code == 200
    body = profile.json()
    labels = {c["label"]: c for c in body["clusters"]}
    sizes = sorted(c["patients"] for c in body["clusters"])
    assert sizes == [4, 4]
    pairs = {tuple(p["pair"]) for c in labels.values() for p in c["top_pairs"]}
    assert pairs == {("ANC", "gp"), ("XR", "rad")}

    csv_text = client.get(f"/clusters/{cjob['result']}/profile",
                          params={"fmt": "csv"}).text
    assert csv_text.startswith("cluster,patients,")


def test_matrix_rejects_bad_params(client):
    mag_id = make_mag(client, grouped_log(), "grouped")
    response = client.post(f"/mags/{mag_id}/matrix",
                           json={"params": {"bogus_knob": 3}})
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "invalid_params"


def test_unknown_job_is_404(client):
    assert client.get("/jobs/nope").status_code == 404


# -- relevance and model ---------------------------------------------


def test_relevance_deterministic_payload(client):
    mag_id = make_mag(client, random_log(random.Random(3), n_cases=6), "rnd")
    body = {"w1": 0.4, "w2": 0.6, "alpha": 0.3}
    a = client.post(f"/mags/{mag_id}/relevance", json=body)
    b = client.post(f"/mags/{mag_id}/relevance", json=body)
    assert a.status_code == 200
    assert a.content == b.content
    scores = [s["score"] for s in a.json()["scores"]]
    assert scores and all(0.0 <= s <= 1.0 for s in scores)
    assert max(scores) == 1.0


def test_relevance_cluster_scope(client):
    mag_id = make_mag(client, grouped_log(), "grouped")
    matrix_job = poll_job(client, client.post(f"/mags/{mag_id}/matrix",
                                              json={}).json())
    cluster_job = poll_job(client, client.post(
        f"/matrices/{matrix_job['result']}/clusters",
        json={"runs": 8, "seeds": 3}).json())
    clusters_id = cluster_job["result"]

    scoped = client.post(f"/mags/{mag_id}/relevance",
                         json={"clusters": clusters_id, "cluster_index": 0})
    assert scoped.status_code == 200
    assert scoped.json()["patients"] == 4

    out_of_range = client.post(f"/mags/{mag_id}/relevance",
                               json={"clusters": clusters_id, "cluster_index": 9})
    assert out_of_range.status_code == 400

    missing_index = client.post(f"/mags/{mag_id}/relevance",
                                json={"clusters": clusters_id})
    assert missing_index.status_code == 400


def test_model_rendering(client):
    mag_id = make_mag(client, random_log(random.Random(11), n_cases=6), "rnd2")
    body = {"relevance": {"w1": 0.5, "w2": 0.5, "alpha": 0.2},
            "min_relevance": 0.0, "options": {"interval_bins": 3}}
    response = client.post(f"/mags/{mag_id}/model", json=body)
    assert response.status_code == 200
    doc = response.json()
    assert doc["nodes"] and doc["edges"] and doc["lanes"]
    ids = {n["id"] for n in doc["nodes"]}
    assert all(e["src"] in ids and e["dst"] in ids for e in doc["edges"])

    dot = client.post(f"/mags/{mag_id}/model", params={"fmt": "dot"}, json=body)
    assert dot.status_code == 200
    assert dot.text.startswith("digraph")

    too_high = client.post(f"/mags/{mag_id}/model",
                           json={**body, "min_relevance": 2.0})
    assert too_high.status_code == 400


def test_sweep_endpoint(client):
    mag_id = make_mag(client, random_log(random.Random(5), n_cases=5), "rnd3")
    response = client.post(f"/mags/{mag_id}/sweep", json={
        "w1_values": [0.0, 1.0], "w2_values": [0.5], "alpha_values": [0.0, 0.5]})
    assert response.status_code == 200
    body = response.json()
    assert len(body["entries"]) == 4
    assert all(len(e["scores"]) == len(body["nodes"]) for e in body["entries"])

    bad = client.post(f"/mags/{mag_id}/sweep", json={"w1": [0.5]})
    assert bad.status_code == 400
