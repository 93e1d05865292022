/** Types and client for the diagnosis service HTTP API. */

export interface RemedyPayload {
  disease_name_en: string;
  disease_name_bn: string;
  cure_en: string;
  cure_bn: string;
  medicine: string;
}

export interface PredictionResponse {
  class: string;
  confidence: number;
  probabilities: Record<string, number>;
  remedy: RemedyPayload;
}

export interface ApiErrorBody {
  error: string;
  message: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export async function predictImage(file: File): Promise<PredictionResponse> {
  const form = new FormData();
  form.append('image', file);
  let response: Response;
  try {
    response = await fetch('/api/v1/predict', { method: 'POST', body: form });
  } catch (err) {
    throw new ApiError(0, 'network', 'Could not reach the diagnosis service.');
  }
  if (!response.ok) {
    let body: ApiErrorBody | null = null;
    try {
      body = (await response.json()) as ApiErrorBody;
    } catch {
      // non-JSON error body; fall through to the generic message
    }
    throw new ApiError(
      response.status,
      body?.error ?? 'error',
      body?.message ?? `Request failed with status ${response.status}.`,
    );
  }
  return (await response.json()) as PredictionResponse;
}
