import type {
  BatchWire,
  ProgressWire,
  SubmissionWire,
  SubmitAckWire,
  ValidationProblem,
} from "./protocol.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Submission was already accepted once; the server keeps the first copy. */
export class ConflictError extends Error {}

/** The server rejected specific fields; nothing was stored. */
export class ValidationError extends Error {
  constructor(public problems: ValidationProblem[]) {
    super(`validation failed for ${problems.length} field(s)`);
  }
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class AnnotationApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async nextBatch(annotatorId: string): Promise<BatchWire> {
    const response = await this.fetchImpl(
      this.url(`/api/annotators/${encodeURIComponent(annotatorId)}/next-batch`),
    );
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as BatchWire;
  }

  async submitRatings(
    annotatorId: string,
    batchId: string,
    body: SubmissionWire,
  ): Promise<SubmitAckWire> {
    const response = await this.fetchImpl(
      this.url(
        `/api/annotators/${encodeURIComponent(annotatorId)}/batches/${encodeURIComponent(batchId)}/ratings`,
      ),
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
    );
    if (response.status === 409) {
      throw new ConflictError(await response.text());
    }
    if (response.status === 422) {
      const detail = (await response.json()) as {
        detail?: { errors?: ValidationProblem[] };
      };
      throw new ValidationError(detail.detail?.errors ?? []);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as SubmitAckWire;
  }

  async progress(): Promise<ProgressWire> {
    const response = await this.fetchImpl(this.url("/api/progress"));
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as ProgressWire;
  }
}
