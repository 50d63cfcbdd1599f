// Mirrors of the service's wire formats. The UI never recomputes any of
// these numbers; everything shown on screen is taken from payloads verbatim.

export interface BackendJson {
  backend_id: string;
  kind: string;
  endpoint: string | null;
  model_name: string | null;
  deterministic: boolean;
  reachable?: boolean;
}

export interface OutcomeJson {
  feature_index: number;
  kind: "retrieval_score" | "generated_text";
  perturbed_text: string;
  similarity_to_reference: number;
  raw_delta: number;
  score?: number;
  response_text?: string;
}

export interface FeatureJson {
  index: number;
  text: string;
  span: [number, number];
  weight: number;
  raw_delta: number;
  outcome: OutcomeJson;
}

export interface ExplanationJson {
  schema_version: number;
  target: "retrieval" | "generation";
  granularity: "word" | "sentence";
  source_text: string;
  reference: { score?: number; response?: string };
  backend: BackendJson;
  config_fingerprint: string;
  warnings: string[];
  features: FeatureJson[];
}

export interface RetrievedDocJson {
  id: string;
  text: string;
  metadata: Record<string, string>;
  score: number;
}

export interface QueryResponseJson {
  question: { id: string; text: string };
  retrieved: RetrievedDocJson[];
  prompt: {
    rendered: string;
    protected_spans: [number, number][];
    warnings: string[];
  };
  response: {
    text: string;
    backend_id: string;
    settings_fingerprint: string;
  };
}

export interface HealthJson {
  status: string;
  backends: BackendJson[];
}

export interface ErrorJson {
  code: string;
  message: string;
}

/** An explanation plus its service-assigned content-digest id. */
export interface StoredExplanation {
  id: string;
  explanation: ExplanationJson;
}
