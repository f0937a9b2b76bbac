import type {
  DiagnosticsEntry,
  GraphDoc,
  ModesDoc,
  ReportDoc,
  SelectionResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) await parseError(response);
    return response.json() as Promise<T>;
  }

  fetchGraph(): Promise<GraphDoc> {
    return this.getJson("/api/graph");
  }

  fetchReport(): Promise<ReportDoc> {
    return this.getJson("/api/report");
  }

  fetchModes(): Promise<ModesDoc> {
    return this.getJson("/api/modes");
  }

  fetchNodeMembers(nodeId: number): Promise<{ id: number; members: number[] }> {
    return this.getJson(`/api/node/${nodeId}/members`);
  }

  fetchModeDiagnostics(
    modeId: number,
    reference: string = "dataset",
    topN: number = 5,
  ): Promise<DiagnosticsEntry & { mode_id: number }> {
    const params = new URLSearchParams({ reference, top_n: String(topN) });
    return this.getJson(`/api/modes/${modeId}/diagnostics?${params}`);
  }

  async submitSelection(nodeIds: number[]): Promise<SelectionResponse> {
    const response = await fetch(this.baseUrl + "/api/selections", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ node_ids: nodeIds }),
    });
    if (!response.ok) await parseError(response);
    return response.json() as Promise<SelectionResponse>;
  }
}
