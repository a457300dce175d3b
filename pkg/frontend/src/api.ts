// Thin versioned client for the annotation API. All mutation carries the
// base version; a 409 surfaces as ConflictError so the app can prompt the
// annotator to reload the server's latest state.

import type { ArticlePayload, TaskInfo, UnitPayload } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ConflictError extends Error {
  currentVersion: number;

  constructor(currentVersion: number) {
    super(`stale write: server is at version ${currentVersion}`);
    this.name = "ConflictError";
    this.currentVersion = currentVersion;
  }
}

export class ApiError extends Error {
  status: number;
  detail: unknown;

  constructor(status: number, detail: unknown) {
    super(`request failed with status ${status}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

export interface NextTask {
  state: "task" | "done";
  task?: TaskInfo;
}

export interface TaskUnits {
  units: UnitPayload[];
  version: number;
  other_annotators: Record<string, UnitPayload[]>;
  blinded: boolean;
}

export interface SaveResult {
  version: number;
}

async function parseBody(resp: Response): Promise<unknown> {
  try {
    return await resp.json();
  } catch {
    return null;
  }
}

export class ApiClient {
  private fetchImpl: FetchLike;
  private base: string;

  constructor(fetchImpl?: FetchLike, base = "") {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
    this.base = base;
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.base + path);
    const body = await parseBody(resp);
    if (!resp.ok) {
      throw new ApiError(resp.status, body);
    }
    return body as T;
  }

  nextTask(annotator: string): Promise<NextTask> {
    return this.get(`/api/tasks/next?annotator=${encodeURIComponent(annotator)}`);
  }

  article(articleId: string): Promise<ArticlePayload> {
    return this.get(`/api/articles/${encodeURIComponent(articleId)}`);
  }

  taskUnits(taskId: string, annotator: string): Promise<TaskUnits> {
    return this.get(
      `/api/tasks/${encodeURIComponent(taskId)}/units?annotator=${encodeURIComponent(annotator)}`,
    );
  }

  agreement(): Promise<Record<string, unknown>> {
    return this.get("/api/agreement");
  }

  progress(): Promise<Record<string, unknown>> {
    return this.get("/api/progress");
  }

  async saveUnits(
    taskId: string,
    annotator: string,
    baseVersion: number,
    units: UnitPayload[],
  ): Promise<SaveResult> {
    const resp = await this.fetchImpl(
      `${this.base}/api/tasks/${encodeURIComponent(taskId)}/units`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ annotator, base_version: baseVersion, units }),
      },
    );
    const body = await parseBody(resp);
    if (resp.status === 409) {
      const detail = (body as { detail?: { current_version?: number } })?.detail;
      throw new ConflictError(detail?.current_version ?? -1);
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, body);
    }
    return body as SaveResult;
  }
}
