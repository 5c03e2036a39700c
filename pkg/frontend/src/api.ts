/** Typed client for the roadhealth HTTP API.
 *
 * The console never computes health or identity on its own; everything shown
 * comes back from these endpoints. `fetchFn` is injectable so tests can run
 * against an in-memory stub.
 */

import type {
  FeatureCollection,
  IngestStatistics,
  LatLng,
  NotifyResponse,
  PotholeFeature,
  SegmentDetail,
  SegmentFeature,
  SegmentReport,
} from "./types.js";
import type { MapFilters } from "./filters.js";
import { potholeQuery } from "./filters.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    /** Backend error class name when the body carries one, e.g. "NoRoute". */
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ContractInput {
  contractor_name: string;
  contractor_contact: string;
  construction_date: string;
  budget: number;
  warranty_end: string;
  category?: string | null;
}

export interface SegmentInput {
  start: LatLng;
  end: LatLng;
  contract: ContractInput;
  mode: "routed" | "straight";
  fallback_straight?: boolean;
}

export class ApiClient {
  token: string | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  get authenticated(): boolean {
    return this.token !== null;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    let payload: BodyInit | undefined;
    if (body instanceof FormData) {
      payload = body;
    } else if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      payload = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: payload,
    });
    if (!response.ok) throw await toApiError(response);
    return (await response.json()) as T;
  }

  async login(username: string, password: string): Promise<void> {
    const out = await this.request<{ token: string }>("POST", "/api/auth/login", {
      username,
      password,
    });
    this.token = out.token;
  }

  logout(): void {
    this.token = null;
  }

  potholes(filters: MapFilters): Promise<FeatureCollection<PotholeFeature>> {
    const query = potholeQuery(filters).toString();
    return this.request("GET", `/api/potholes${query ? "?" + query : ""}`);
  }

  segments(category?: string): Promise<FeatureCollection<SegmentFeature>> {
    const query = category ? `?category=${encodeURIComponent(category)}` : "";
    return this.request("GET", `/api/segments${query}`);
  }

  createSegment(input: SegmentInput): Promise<SegmentDetail> {
    return this.request("POST", "/api/segments", input);
  }

  patchSegment(id: number, input: Partial<SegmentInput>): Promise<SegmentDetail> {
    return this.request("PATCH", `/api/segments/${id}`, input);
  }

  deleteSegment(id: number): Promise<{ deleted: number }> {
    return this.request("DELETE", `/api/segments/${id}`);
  }

  report(id: number): Promise<SegmentReport> {
    return this.request("GET", `/api/segments/${id}/report`);
  }

  notify(id: number): Promise<NotifyResponse> {
    return this.request("POST", `/api/segments/${id}/notify`);
  }

  ingest(detections: Blob, gps: Blob): Promise<IngestStatistics> {
    const form = new FormData();
    form.append("detections", detections, "detections.jsonl");
    form.append("gps", gps, "gps.csv");
    return this.request("POST", "/api/ingest", form);
  }

  tick(): Promise<Record<string, number>> {
    return this.request("POST", "/api/tick");
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = `http_${response.status}`;
  let message = response.statusText || `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { detail?: unknown };
    const detail = body.detail ?? body;
    if (typeof detail === "string") {
      message = detail;
    } else if (detail && typeof detail === "object") {
      const d = detail as { error?: string; message?: string };
      if (d.error) code = d.error;
      if (d.message) message = d.message;
    }
  } catch {
    // non-JSON error body: keep the status line
  }
  return new ApiError(response.status, code, message);
}
