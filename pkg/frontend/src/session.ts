import { ApiError } from './api.js';
import type { ParseRendering, ResultItem, SearchResponse, UiState } from './types.js';

export interface ClientLike {
  parse(query: string): Promise<ParseRendering>;
  search(query: string, limit?: number, mode?: string): Promise<SearchResponse>;
}

/**
 * Owns the UI state and the request sequencing.
 *
 * Every request draws a number from one monotonically increasing counter;
 * a response may render only if its number beats the highest one already
 * rendered for its surface (chips vs. results). Late completions of
 * superseded requests are dropped, so out-of-order networks can never put
 * stale chips or stale results on screen.
 */
export class SearchSession {
  readonly state: UiState = {
    query: '',
    parsed: null,
    results: [],
    notices: [],
    loading: false,
    error: null,
  };

  private seq = 0;
  private chipsSeq = 0;
  private resultsSeq = 0;
  private latestSearchSeq = 0;
  private lastSubmitted = '';

  constructor(
    private readonly client: ClientLike,
    private readonly onChange: (state: UiState) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  private fail(err: unknown): void {
    if (err instanceof ApiError && err.status === 400) {
      this.state.error = { kind: 'validation', message: err.message };
    } else {
      const message = err instanceof Error ? err.message : String(err);
      this.state.error = { kind: 'network', message };
    }
    this.state.results = [];
    this.state.notices = [];
  }

  /** Live intent preview while typing; updates chips only. */
  async preview(query: string): Promise<void> {
    const seq = ++this.seq;
    try {
      const parsed = await this.client.parse(query);
      if (seq <= this.chipsSeq) return;
      this.chipsSeq = seq;
      this.state.parsed = parsed;
      if (this.state.error?.kind === 'validation') this.state.error = null;
    } catch (err) {
      if (seq <= this.chipsSeq) return;
      this.chipsSeq = seq;
      this.fail(err);
    }
    this.emit();
  }

  /** Full search on explicit submit. */
  async submit(query: string): Promise<void> {
    this.state.query = query;
    if (query.trim() === '') {
      this.state.error = { kind: 'validation', message: 'enter a query' };
      this.state.results = [];
      this.state.notices = [];
      this.emit();
      return;
    }
    const seq = ++this.seq;
    this.latestSearchSeq = seq;
    this.lastSubmitted = query;
    this.state.loading = true;
    this.emit();
    try {
      const response = await this.client.search(query);
      if (seq === this.latestSearchSeq) this.state.loading = false;
      if (seq > this.resultsSeq) {
        this.resultsSeq = seq;
        this.chipsSeq = Math.max(this.chipsSeq, seq);
        this.state.results = response.results;
        this.state.parsed = response.parsed;
        this.state.notices = response.parsed.relaxation_log.map((entry) => `dropped: ${entry}`);
        this.state.error = null;
      }
    } catch (err) {
      if (seq === this.latestSearchSeq) this.state.loading = false;
      if (seq > this.resultsSeq) {
        this.resultsSeq = seq;
        this.chipsSeq = Math.max(this.chipsSeq, seq);
        this.fail(err);
      }
    }
    this.emit();
  }

  /** Re-run the last submitted query after a retriable failure. */
  async retry(): Promise<void> {
    if (this.lastSubmitted !== '') {
      await this.submit(this.lastSubmitted);
    }
  }

  dismissNotice(index: number): void {
    this.state.notices = this.state.notices.filter((_, i) => i !== index);
    this.emit();
  }

  resultIds(): string[] {
    return this.state.results.map((r: ResultItem) => r.snippet_id);
  }
}
