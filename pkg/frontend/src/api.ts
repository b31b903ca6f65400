import type { ParseRendering, SearchResponse } from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx service reply carrying the {code, message} error body. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export class SearchClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async get<T>(path: string, params: Record<string, string>): Promise<T> {
    const qs = new URLSearchParams(params).toString();
    const response = await this.fetchFn(`${this.baseUrl}${path}?${qs}`);
    if (!response.ok) {
      let code = 'UNKNOWN';
      let message = `request failed with status ${response.status}`;
      try {
        const body = (await response.json()) as { code?: string; message?: string };
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // keep the generic message when the body is not the error shape
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  parse(query: string): Promise<ParseRendering> {
    return this.get<ParseRendering>('/v1/parse', { q: query });
  }

  search(query: string, limit = 10, mode = 'full'): Promise<SearchResponse> {
    return this.get<SearchResponse>('/v1/search', {
      q: query,
      limit: String(limit),
      mode,
    });
  }

  health(): Promise<{ status: string; index_loaded: boolean }> {
    return this.get('/v1/health', {});
  }
}
