"""HTTP facade over the pipeline.

Interactive steps (preview, relevance, rendering) answer synchronously;
matrix building and clustering -- the two computations that grow with
the cohort -- run as polled background jobs.  Artifacts are immutable
and content-addressed, so every GET is a consistent snapshot and
repeating a POST with identical input lands on the same id.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import cohort_filter as cf
from ..clustering import (ClusterSet, DissimilarityMatrix,
                          cluster_frequency_profile,
                          detect_overlapping_communities, similarity_graph)
from ..dissimilarity import DissimParams, pairwise_matrix
from ..eventlog import EventLog, ParseConfig, parse_event_log, pathway_length_stats
from ..mag import Mag, build_mag
from ..model_export import RenderOptions, export_dot, filter_by_relevance, render_model
from ..relevance import (RelevanceParams, base_relevance_map, compute_bundle,
                         final_relevance, parameter_sweep)
from . import schemas
from .jobs import JobManager
from .store import ArtifactStore, DuplicateName, UnknownId

SEQUENCE_ASPECT = "Sequence"


@dataclass
class ServiceConfig:
    data_dir: str
    workers: int = 2
    static_dir: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        doc = json.loads(Path(path).read_text())
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config key(s): {sorted(unknown)}")
        return cls(**doc)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def create_app(config: ServiceConfig) -> FastAPI:
    store = ArtifactStore(config.data_dir)
    jobs = JobManager(config.workers)
    app = FastAPI(title="pathway model service")
    app.state.store = store
    app.state.jobs = jobs

    # -- error surface ----------------------------------------------

    @app.exception_handler(RequestValidationError)
    async def bad_payload(request: Request, exc: RequestValidationError):
        return _error(400, "bad_payload", str(exc.errors()[:3]))

    @app.exception_handler(UnknownId)
    async def unknown_id(request: Request, exc: UnknownId):
        return _error(404, "unknown_id", f"no such artifact: {exc.args[0]}")

    @app.exception_handler(DuplicateName)
    async def duplicate_name(request: Request, exc: DuplicateName):
        return _error(409, "duplicate_name",
                      f"dataset name already taken: {exc.args[0]}")

    @app.exception_handler(ValueError)
    async def invalid_params(request: Request, exc: ValueError):
        return _error(400, "invalid_params", str(exc))

    # -- artifact helpers --------------------------------------------

    def load_log(dataset_id: str) -> EventLog:
        doc = store.get(dataset_id, kind="dataset")
        return EventLog.from_jsonl(doc["jsonl"])

    def save_log(log: EventLog, name: str, malformed: int = 0) -> schemas.DatasetInfo:
        dataset_id = store.put("dataset", {"jsonl": log.to_jsonl()})
        store.register_name(name, dataset_id)
        return schemas.DatasetInfo(
            id=dataset_id, name=name, cases=log.n_cases, events=log.n_events,
            schema=list(log.schema), malformed=malformed)

    def load_mag(mag_id: str) -> tuple[Mag, dict]:
        doc = store.get(mag_id, kind="mag")
        return Mag.from_json(doc["mag"]), doc

    def restrict_to_cluster(mag: Mag, spec: schemas.RelevanceSpec) -> Mag:
        if spec.clusters is None:
            return mag
        if spec.cluster_index is None:
            raise ValueError("clusters id given without cluster_index")
        doc = store.get(spec.clusters, kind="clusters")
        cs = ClusterSet.from_json(doc["clusters"])
        if spec.cluster_index >= len(cs.clusters):
            raise ValueError(f"cluster_index {spec.cluster_index} out of range "
                             f"({len(cs.clusters)} clusters)")
        members = set(cs.clusters[spec.cluster_index]) & set(mag.patients)
        if not members:
            raise ValueError("selected cluster shares no patients with this graph")
        return Mag(mag.aspects, {pid: mag.path_of(pid) for pid in sorted(members)},
                   mag.time_unit)

    def relevance_scores(mag_id: str, spec: schemas.RelevanceSpec):
        mag, _ = load_mag(mag_id)
        scoped = restrict_to_cluster(mag, spec)
        params = RelevanceParams(w1=spec.w1, w2=spec.w2, alpha_final=spec.alpha)
        bundle = compute_bundle(scoped)
        r0 = base_relevance_map(scoped, bundle, params)
        final = final_relevance(scoped, r0, params.alpha_final)
        return scoped, final

    def frequency_tables(body: schemas.FilterPreview, cohort_id: str):
        cohort = load_log(cohort_id)
        control = load_log(body.control)
        procs = cf.FrequencyTable.from_logs(cohort, control,
                                            body.procedure_perspective)
        occs = cf.FrequencyTable.from_logs(cohort, control,
                                           body.occupation_perspective)
        t = body.thresholds
        thresholds = cf.FilterThresholds(
            theta_p=t.theta_p, min_p=t.min_p,
            max_p=math.inf if t.max_p is None else t.max_p,
            theta_o=t.theta_o, min_o=t.min_o,
            max_o=math.inf if t.max_o is None else t.max_o)
        return cohort, thresholds, procs, occs

    # -- datasets ----------------------------------------------------

    @app.post("/datasets", status_code=201, response_model=schemas.DatasetInfo)
    def upload_dataset(body: schemas.DatasetUpload):
        if body.format == "jsonl":
            log = EventLog.from_jsonl(body.content)
            malformed = 0
        else:
            if body.parse is None:
                raise ValueError("csv uploads need a parse configuration")
            parse = ParseConfig.from_dict({**body.parse, "on_malformed": "drop"})
            log = parse_event_log(body.content, parse)
            malformed = len(log.parse_report.malformed)
        return save_log(log, body.name, malformed)

    @app.get("/datasets")
    def list_datasets():
        return {"datasets": [{"name": n, "id": i}
                             for n, i in store.datasets().items()]}

    @app.get("/datasets/{dataset_id}/stats", response_model=schemas.DatasetStats)
    def dataset_stats(dataset_id: str):
        log = load_log(dataset_id)
        st = pathway_length_stats(log)
        return schemas.DatasetStats(
            id=dataset_id, cases=log.n_cases, events=log.n_events,
            lengths=schemas.LengthStatsInfo(**st.__dict__))

    # -- cohort filtering --------------------------------------------

    @app.post("/datasets/{dataset_id}/filter/preview")
    def filter_preview(dataset_id: str, body: schemas.FilterPreview):
        cohort, thresholds, procs, occs = frequency_tables(body, dataset_id)
        report = cf.preview_filter(thresholds, procs, occs, log=cohort,
                                   sample_size=body.sample_size)
        return json.loads(report.to_json())

    @app.post("/datasets/{dataset_id}/filter/apply", status_code=201,
              response_model=schemas.ApplyResult)
    def filter_apply(dataset_id: str, body: schemas.FilterApply):
        cohort, thresholds, procs, occs = frequency_tables(body, dataset_id)
        typ_p = cf.select_typical_codes(procs, thresholds.theta_p,
                                        thresholds.min_p, thresholds.max_p)
        typ_o = cf.select_typical_codes(occs, thresholds.theta_o,
                                        thresholds.min_o, thresholds.max_o)
        result = cf.filter_events(
            cohort, body.diagnosis_whitelist, typ_p, typ_o,
            diagnosis_perspective=body.diagnosis_perspective,
            procedure_perspective=body.procedure_perspective,
            occupation_perspective=body.occupation_perspective)
        info = save_log(result.log, body.name)
        return schemas.ApplyResult(id=info.id, name=body.name,
                                   cases=result.log.n_cases,
                                   events=result.log.n_events,
                                   emptied_cases=result.emptied_cases)

    # -- MAGs --------------------------------------------------------

    @app.post("/datasets/{dataset_id}/mag", status_code=201,
              response_model=schemas.MagInfo)
    def make_mag(dataset_id: str, body: schemas.MagSpec):
        log = load_log(dataset_id)
        missing = [a for a in body.aspects if a not in log.schema]
        if missing:
            raise ValueError(f"aspect(s) not in dataset schema: {missing}")
        mag = build_mag(log, body.aspects,
                        add_virtual_endpoints=body.virtual_endpoints)
        mag_id = store.put("mag", {"dataset": dataset_id, "mag": mag.to_json(),
                                   "aspects": list(mag.aspects)})
        return schemas.MagInfo(id=mag_id, dataset=dataset_id,
                               aspects=list(mag.aspects),
                               patients=len(mag.patients),
                               nodes=mag.n_nodes, edges=mag.n_edges)

    # -- jobs: matrix and clustering ---------------------------------

    @app.post("/mags/{mag_id}/matrix", status_code=202, response_model=schemas.JobInfo)
    def start_matrix(mag_id: str, body: schemas.MatrixSpec):
        mag, _ = load_mag(mag_id)  # validate before queueing
        params = DissimParams.from_dict(body.params)
        aspects = body.activity_aspects
        if aspects is None:
            aspects = [a for a in mag.aspects if a != SEQUENCE_ASPECT]

        def work(report) -> str:
            sub = mag.subdetermine(aspects)
            pathways = [sub.extract_pathway(pid) for pid in sub.patients]
            matrix = pairwise_matrix(
                pathways, params, workers=body.workers, ids=sub.patients,
                progress=lambda done, total: report(done / total))
            return store.put("matrix", {
                "mag": mag_id, "ids": list(matrix.ids),
                "values": matrix.values.tolist(), "params": matrix.params})

        return schemas.JobInfo(**jobs.submit("matrix", work).snapshot())

    @app.post("/matrices/{matrix_id}/clusters", status_code=202,
              response_model=schemas.JobInfo)
    def start_clustering(matrix_id: str, body: schemas.ClusterSpec):
        doc = store.get(matrix_id, kind="matrix")
        matrix = DissimilarityMatrix(tuple(doc["ids"]),
                                     np.array(doc["values"]), doc["params"])

        def work(report) -> str:
            graph = similarity_graph(matrix)
            report(0.1)
            cs = detect_overlapping_communities(graph, runs=body.runs,
                                                seeds=body.seeds, alpha=body.alpha)
            report(0.9)
            return store.put("clusters", {"matrix": matrix_id,
                                          "clusters": cs.to_json()})

        return schemas.JobInfo(**jobs.submit("clustering", work).snapshot())

    @app.get("/jobs/{job_id}", response_model=schemas.JobInfo)
    def job_status(job_id: str):
        try:
            job = jobs.get(job_id)
        except KeyError:
            raise UnknownId(job_id)
        return schemas.JobInfo(**job.snapshot())

    # -- cluster profiles --------------------------------------------

    @app.get("/clusters/{clusters_id}/profile")
    def cluster_profile(clusters_id: str, p1: str = "intervention",
                        p2: str = "occupation", fmt: str = "json",
                        top: int = 10):
        doc = store.get(clusters_id, kind="clusters")
        cs = ClusterSet.from_json(doc["clusters"])
        matrix_doc = store.get(doc["matrix"], kind="matrix")
        mag_doc = store.get(matrix_doc["mag"], kind="mag")
        log = load_log(mag_doc["dataset"])
        table = cluster_frequency_profile(cs, log, (p1, p2))
        if fmt == "csv":
            return PlainTextResponse(table.to_csv(k=top), media_type="text/csv")
        return {
            "n_singletons": table.n_singletons,
            "clusters": [{
                "label": p.label, "patients": p.n_patients,
                "mean_length": p.mean_length, "std_length": p.std_length,
                "top_pairs": [{"pair": list(pair), "frequency": freq}
                              for pair, freq in p.top_pairs(top)],
            } for p in table.profiles],
        }

    # -- relevance and model rendering -------------------------------

    @app.post("/mags/{mag_id}/relevance")
    def score_relevance(mag_id: str, body: schemas.RelevanceSpec):
        scoped, final = relevance_scores(mag_id, body)
        return {
            "mag": mag_id,
            "params": {"w1": body.w1, "w2": body.w2, "alpha": body.alpha},
            "patients": len(scoped.patients),
            "scores": [{"node": list(node), "score": final[node]}
                       for node in sorted(final, key=lambda n: json.dumps(list(n)))],
        }

    @app.post("/mags/{mag_id}/sweep")
    def sweep_relevance(mag_id: str, body: dict):
        known = {"w1_values", "w2_values", "alpha_values", "nodes",
                 "clusters", "cluster_index"}
        unknown = set(body) - known
        if unknown:
            raise ValueError(f"unknown sweep key(s): {sorted(unknown)}")
        mag, _ = load_mag(mag_id)
        scoped = restrict_to_cluster(mag, schemas.RelevanceSpec(
            clusters=body.get("clusters"), cluster_index=body.get("cluster_index")))
        nodes = [tuple(n) for n in body["nodes"]] if body.get("nodes") else None
        table = parameter_sweep(
            scoped, compute_bundle(scoped),
            body.get("w1_values", [0.5]), body.get("w2_values", [0.5]),
            body.get("alpha_values", [0.85]), nodes=nodes)
        return json.loads(table.to_json())

    @app.post("/mags/{mag_id}/model")
    def render(mag_id: str, body: schemas.ModelSpec, fmt: str = "json"):
        scoped, scores = relevance_scores(mag_id, body.relevance)
        max_r = math.inf if body.max_relevance is None else body.max_relevance
        simplified = filter_by_relevance(scoped, scores, body.min_relevance, max_r)
        options = RenderOptions.from_dict(body.options)
        doc = render_model(simplified, options,
                           scores={n: scores[n] for n in simplified.real_nodes})
        if fmt == "dot":
            sink = io.StringIO()
            export_dot(doc, sink)
            return PlainTextResponse(sink.getvalue(), media_type="text/vnd.graphviz")
        return json.loads(doc.to_json())

    if config.static_dir and Path(config.static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=config.static_dir, html=True),
                  name="ui")

    return app
