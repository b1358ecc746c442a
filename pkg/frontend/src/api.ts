import type { FormValues, NextResponse, SubmitAck } from './types';

/** The server rejected a rating; `fields` names the offending metrics. */
export class ValidationError extends Error {
  constructor(message: string, readonly fields: string[]) {
    super(message);
    this.name = 'ValidationError';
  }
}

export interface ApiConfig {
  baseUrl: string;
  studyId: string;
  raterId: string;
  token?: string;
}

/** Thin typed client for the rating service endpoints. */
export class ReviewApi {
  constructor(private readonly config: ApiConfig) {}

  private url(path: string, params: Record<string, string> = {}): string {
    const url = new URL(path, this.config.baseUrl);
    for (const [key, value] of Object.entries(params)) {
      url.searchParams.set(key, value);
    }
    if (this.config.token) {
      url.searchParams.set('token', this.config.token);
    }
    return url.toString();
  }

  /** Absolute URL for a task's audio clip. */
  audioUrl(path: string): string {
    return new URL(path, this.config.baseUrl).toString();
  }

  async next(): Promise<NextResponse> {
    const response = await fetch(
      this.url(`/studies/${this.config.studyId}/next`, { rater: this.config.raterId }),
    );
    if (!response.ok) {
      throw new Error(`next task failed: HTTP ${response.status}`);
    }
    return (await response.json()) as NextResponse;
  }

  async submit(itemId: string, values: FormValues): Promise<SubmitAck> {
    const body = {
      item_id: itemId,
      rater_id: this.config.raterId,
      ...values,
    };
    const response = await fetch(this.url(`/studies/${this.config.studyId}/ratings`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (response.status === 422) {
      const detail = (await response.json()).detail ?? {};
      throw new ValidationError(
        String(detail.error ?? 'rating rejected'),
        Array.isArray(detail.fields) ? detail.fields : [],
      );
    }
    if (!response.ok) {
      throw new Error(`submit failed: HTTP ${response.status}`);
    }
    return (await response.json()) as SubmitAck;
  }
}
