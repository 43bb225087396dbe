/** Thin typed client for the pathway service.
 *
 * Every method is a single fetch against one endpoint; all domain
 * computation stays on the server.  Errors use the service envelope
 * `{"error": {"code", "message"}}` and surface as `ApiError` so views
 * can show them inline without losing the machine-readable code.
 */

import type {
  ApiErrorBody,
  ApplyBody,
  ApplyResult,
  DatasetInfo,
  DatasetList,
  DatasetStats,
  JobInfo,
  MagInfo,
  ModelBody,
  ModelDoc,
  PreviewBody,
  PreviewReport,
  ProfileDoc,
  RelevanceParamsBody,
  RelevanceScores,
  SweepBody,
  SweepTable,
  UploadBody,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function raiseFor(res: Response): Promise<never> {
  let code = "unknown";
  let message = `${res.status} ${res.statusText}`;
  try {
    const body = (await res.json()) as ApiErrorBody;
    if (body && body.error) {
      code = body.error.code;
      message = body.error.message;
    }
  } catch {
    // non-envelope body: keep the HTTP status text
  }
  throw new ApiError(res.status, code, message);
}

export interface ProfileQuery {
  /** Aspect pair profiled per transition, e.g. intervention/occupation. */
  p1?: string;
  p2?: string;
  top?: number;
}

export interface JobWait {
  intervalMs?: number;
  timeoutMs?: number;
}

export class Client {
  /** `base` is "" in the browser (same origin) or an absolute URL in tests. */
  constructor(readonly base: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.base + path, init);
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as T;
  }

  private async text(path: string, init?: RequestInit): Promise<string> {
    const res = await fetch(this.base + path, init);
    if (!res.ok) await raiseFor(res);
    return await res.text();
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  uploadDataset(body: UploadBody): Promise<DatasetInfo> {
    return this.post("/datasets", body);
  }

  listDatasets(): Promise<DatasetList> {
    return this.json("/datasets");
  }

  stats(datasetId: string): Promise<DatasetStats> {
    return this.json(`/datasets/${datasetId}/stats`);
  }

  filterPreview(datasetId: string, body: PreviewBody): Promise<PreviewReport> {
    return this.post(`/datasets/${datasetId}/filter/preview`, body);
  }

  filterApply(datasetId: string, body: ApplyBody): Promise<ApplyResult> {
    return this.post(`/datasets/${datasetId}/filter/apply`, body);
  }

  makeMag(datasetId: string, aspects: string[], virtualEndpoints = true): Promise<MagInfo> {
    return this.post(`/datasets/${datasetId}/mag`, {
      aspects,
      virtual_endpoints: virtualEndpoints,
    });
  }

  startMatrix(magId: string, body: Record<string, unknown> = {}): Promise<JobInfo> {
    return this.post(`/mags/${magId}/matrix`, body);
  }

  startClusters(matrixId: string, body: Record<string, unknown> = {}): Promise<JobInfo> {
    return this.post(`/matrices/${matrixId}/clusters`, body);
  }

  job(jobId: string): Promise<JobInfo> {
    return this.json(`/jobs/${jobId}`);
  }

  /** Poll a job until it leaves the queue; the caller checks `state`. */
  async waitForJob(jobId: string, wait: JobWait = {}): Promise<JobInfo> {
    const interval = wait.intervalMs ?? 150;
    const deadline = Date.now() + (wait.timeoutMs ?? 120_000);
    for (;;) {
      const info = await this.job(jobId);
      if (info.state === "done" || info.state === "failed") return info;
      if (Date.now() > deadline) {
        throw new ApiError(0, "timeout", `job ${jobId} still ${info.state}`);
      }
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }

  profile(clustersId: string, query: ProfileQuery = {}): Promise<ProfileDoc> {
    return this.json(`/clusters/${clustersId}/profile${profileQueryString(query)}`);
  }

  /** URL of the CSV rendition; the download link points straight at it. */
  profileCsvUrl(clustersId: string, query: ProfileQuery = {}): string {
    return `${this.base}/clusters/${clustersId}/profile${profileQueryString(query, true)}`;
  }

  profileCsv(clustersId: string, query: ProfileQuery = {}): Promise<string> {
    return this.text(`/clusters/${clustersId}/profile${profileQueryString(query, true)}`);
  }

  relevance(magId: string, body: RelevanceParamsBody): Promise<RelevanceScores> {
    return this.post(`/mags/${magId}/relevance`, body);
  }

  sweep(magId: string, body: SweepBody): Promise<SweepTable> {
    return this.post(`/mags/${magId}/sweep`, body);
  }

  model(magId: string, body: ModelBody): Promise<ModelDoc> {
    return this.post(`/mags/${magId}/model`, body);
  }

  modelDot(magId: string, body: ModelBody): Promise<string> {
    return this.text(`/mags/${magId}/model?fmt=dot`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}

function profileQueryString(query: ProfileQuery, csv = false): string {
  const params = new URLSearchParams();
  if (csv) params.set("fmt", "csv");
  if (query.p1 !== undefined) params.set("p1", String(query.p1));
  if (query.p2 !== undefined) params.set("p2", String(query.p2));
  if (query.top !== undefined) params.set("top", String(query.top));
  const s = params.toString();
  return s === "" ? "" : `?${s}`;
}
