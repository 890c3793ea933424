import type {
  DecisionAck,
  JobStatus,
  MetricsPayload,
  ProjectInfo,
  QueuePage,
  Submission,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorClass: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client for the review service's /api/v1 endpoints. */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.base}/api/v1${path}`, init);
    } catch (cause) {
      throw new ApiError(0, "Unreachable", String(cause));
    }
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const detail = (body as { detail?: { error?: string; message?: string } } | null)
        ?.detail;
      throw new ApiError(
        response.status,
        detail?.error ?? "HttpError",
        detail?.message ?? `request failed with status ${response.status}`,
      );
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  projects(): Promise<{ projects: string[] }> {
    return this.request("/projects");
  }

  projectInfo(project: string): Promise<ProjectInfo> {
    return this.request(`/projects/${encodeURIComponent(project)}`);
  }

  queue(project: string, code: string, limit?: number): Promise<QueuePage> {
    const page = limit === undefined ? "" : `&limit=${limit}`;
    return this.request(
      `/projects/${encodeURIComponent(project)}/queue?code=${encodeURIComponent(code)}${page}`,
    );
  }

  decide(project: string, submission: Submission): Promise<DecisionAck> {
    return this.post(`/projects/${encodeURIComponent(project)}/decisions`, submission);
  }

  metrics(project: string, code: string): Promise<MetricsPayload> {
    return this.request(
      `/projects/${encodeURIComponent(project)}/metrics?code=${encodeURIComponent(code)}`,
    );
  }

  retrain(project: string, code: string): Promise<{ job: string }> {
    return this.post(`/projects/${encodeURIComponent(project)}/retrain`, { code });
  }

  job(project: string, id: string): Promise<JobStatus> {
    return this.request(
      `/projects/${encodeURIComponent(project)}/jobs/${encodeURIComponent(id)}`,
    );
  }
}
