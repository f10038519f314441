/** Typed client for the rating service.
 *
 * Every 2xx body is validated before it reaches the DOM so a malformed
 * payload surfaces as a catchable error (rendered as a banner), never as a
 * crash mid-render.
 */

import type {
  NextResponse,
  Progress,
  RaterSample,
  RatingAck,
  Scores,
  SessionInfo,
} from "./types.js";

/** Non-2xx reply carrying the service's {code, message} error body. */
export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

/** 2xx reply whose body does not match the documented shape. */
export class MalformedPayloadError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "MalformedPayloadError";
  }
}

function isStringList(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((s) => typeof s === "string");
}

function asObject(value: unknown): Record<string, unknown> | null {
  return typeof value === "object" && value !== null
    ? (value as Record<string, unknown>)
    : null;
}

export function parseSample(value: unknown): RaterSample {
  const obj = asObject(value);
  if (
    obj === null ||
    typeof obj.sample_id !== "string" ||
    !isStringList(obj.source_sentences) ||
    !isStringList(obj.adapted_sentences)
  ) {
    throw new MalformedPayloadError(
      "sample payload is missing sample_id, source_sentences or adapted_sentences",
    );
  }
  return {
    sample_id: obj.sample_id,
    source_sentences: obj.source_sentences,
    adapted_sentences: obj.adapted_sentences,
  };
}

export function parseNextResponse(value: unknown): NextResponse {
  const obj = asObject(value);
  if (
    obj === null ||
    typeof obj.complete !== "boolean" ||
    typeof obj.rated !== "number" ||
    typeof obj.total !== "number"
  ) {
    throw new MalformedPayloadError("next-sample payload is malformed");
  }
  if (obj.complete) {
    return { complete: true, rated: obj.rated, total: obj.total };
  }
  return {
    complete: false,
    sample: parseSample(obj.sample),
    rated: obj.rated,
    total: obj.total,
  };
}

/** What the app needs from the service; tests inject scripted stand-ins. */
export interface RatingBackend {
  nextSample(sessionId: string, rater: string): Promise<NextResponse>;
  submitRating(
    sessionId: string,
    rater: string,
    sampleId: string,
    scores: Scores,
  ): Promise<RatingAck>;
  progress(sessionId: string, rater: string): Promise<Progress>;
}

export class RatingApi implements RatingBackend {
  constructor(private readonly baseUrl: string = "") {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await fetch(this.baseUrl + path, init);
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      if (response.ok) {
        throw new MalformedPayloadError(`non-JSON reply from ${path}`);
      }
    }
    if (!response.ok) {
      const err = asObject(body) ?? {};
      throw new ApiRequestError(
        response.status,
        typeof err.code === "string" ? err.code : "unknown_error",
        typeof err.message === "string"
          ? err.message
          : `request to ${path} failed with status ${response.status}`,
      );
    }
    return body;
  }

  private post(path: string, payload: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async createSession(n: number, seed: number): Promise<SessionInfo> {
    const body = asObject(await this.post("/api/sessions", { n, seed }));
    if (
      body === null ||
      typeof body.session_id !== "string" ||
      typeof body.n !== "number"
    ) {
      throw new MalformedPayloadError("session payload is malformed");
    }
    return {
      session_id: body.session_id,
      n: body.n,
      created_at: typeof body.created_at === "string" ? body.created_at : "",
    };
  }

  async nextSample(sessionId: string, rater: string): Promise<NextResponse> {
    const body = await this.request(
      `/api/sessions/${encodeURIComponent(sessionId)}/next` +
        `?rater=${encodeURIComponent(rater)}`,
    );
    return parseNextResponse(body);
  }

  async submitRating(
    sessionId: string,
    rater: string,
    sampleId: string,
    scores: Scores,
  ): Promise<RatingAck> {
    const body = asObject(
      await this.post("/api/ratings", {
        session_id: sessionId,
        rater_id: rater,
        sample_id: sampleId,
        ...scores,
      }),
    );
    if (
      body === null ||
      typeof body.record_id !== "number" ||
      typeof body.sample_id !== "string"
    ) {
      throw new MalformedPayloadError("rating acknowledgement is malformed");
    }
    return { record_id: body.record_id, sample_id: body.sample_id };
  }

  async progress(sessionId: string, rater: string): Promise<Progress> {
    const body = asObject(
      await this.request(
        `/api/sessions/${encodeURIComponent(sessionId)}/progress` +
          `?rater=${encodeURIComponent(rater)}`,
      ),
    );
    if (
      body === null ||
      typeof body.total !== "number" ||
      typeof body.rated !== "number"
    ) {
      throw new MalformedPayloadError("progress payload is malformed");
    }
    return {
      session_id:
        typeof body.session_id === "string" ? body.session_id : sessionId,
      total: body.total,
      rated: body.rated,
      remaining: typeof body.remaining === "number" ? body.remaining : null,
      complete: body.complete === true,
    };
  }
}
