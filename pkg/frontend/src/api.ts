/**
 * Thin typed client for the memplan HTTP API.
 *
 * The explorer never computes memory or frontiers itself; every number it
 * renders comes from these responses. `fetchFn` is injectable for tests.
 */

import type {
  ApiError,
  Envelope,
  FrontierResponse,
  ModelsResponse,
  PlanResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  constructor(public readonly api: ApiError) {
    super(`${api.code}: ${api.message}`);
    this.name = "ApiRequestError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async models(): Promise<ModelsResponse> {
    return this.request<ModelsResponse>("GET", "/models");
  }

  async frontier(body: Record<string, unknown>): Promise<FrontierResponse> {
    return this.request<FrontierResponse>("POST", "/frontier", body);
  }

  async plan(body: Record<string, unknown>): Promise<PlanResponse> {
    return this.request<PlanResponse>("POST", "/plan", body);
  }

  private async request<T>(method: string, path: string, body?: Record<string, unknown>): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchFn(this.baseUrl + path, init);
    let doc: Envelope<T>;
    try {
      doc = (await response.json()) as Envelope<T>;
    } catch {
      throw new ApiRequestError({
        code: "BAD_RESPONSE",
        message: `non-JSON response (HTTP ${response.status})`,
      });
    }
    if (!doc.ok || doc.result === undefined) {
      throw new ApiRequestError(doc.error ?? { code: "BAD_RESPONSE", message: "missing error body" });
    }
    return doc.result;
  }
}
