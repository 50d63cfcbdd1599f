import type {
  ErrorJson,
  ExplanationJson,
  HealthJson,
  QueryResponseJson,
  StoredExplanation,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

async function raiseApiError(response: Response): Promise<never> {
  let body: ErrorJson = { code: "unknown", message: response.statusText };
  try {
    body = (await response.json()) as ErrorJson;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(body.code, body.message, response.status);
}

/** Thin typed client over the explanation service. */
export class ApiClient {
  constructor(public readonly base: string = "") {}

  private async postJson(path: string, body: unknown): Promise<Response> {
    const response = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await raiseApiError(response);
    return response;
  }

  async health(): Promise<HealthJson> {
    const response = await fetch(this.base + "/api/health");
    if (!response.ok) await raiseApiError(response);
    return (await response.json()) as HealthJson;
  }

  async config(): Promise<Record<string, unknown>> {
    const response = await fetch(this.base + "/api/config");
    if (!response.ok) await raiseApiError(response);
    return (await response.json()) as Record<string, unknown>;
  }

  async query(body: Record<string, unknown>): Promise<QueryResponseJson> {
    const response = await this.postJson("/api/query", body);
    return (await response.json()) as QueryResponseJson;
  }

  private async storedExplanation(response: Response): Promise<StoredExplanation> {
    return {
      id: response.headers.get("X-Explanation-Id") ?? "",
      explanation: (await response.json()) as ExplanationJson,
    };
  }

  async explainRetrieval(body: Record<string, unknown>): Promise<StoredExplanation> {
    return this.storedExplanation(await this.postJson("/api/explain/retrieval", body));
  }

  async explainGeneration(body: Record<string, unknown>): Promise<StoredExplanation> {
    return this.storedExplanation(await this.postJson("/api/explain/generation", body));
  }

  /**
   * What-if lookup for one feature. Returns the raw body text so callers
   * can show the payload exactly as the service sent it.
   */
  async perturbation(explanationId: string, featureIndex: number): Promise<string> {
    const response = await fetch(
      `${this.base}/api/perturbation/${explanationId}/${featureIndex}`,
      { method: "POST" },
    );
    if (!response.ok) await raiseApiError(response);
    return response.text();
  }
}
