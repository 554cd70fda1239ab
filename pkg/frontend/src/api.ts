/**
 * Typed client for the textsieve review service.
 *
 * Every number shown anywhere in the UI originates here; the UI never
 * computes metrics itself. Report routes are fetched with their raw body
 * text preserved so the dashboard can echo the service's own number
 * formatting byte for byte.
 */

export type VerdictLabel = "error" | "unique";

export interface ServiceInfo {
  service: string;
  round: number;
  strategy: string;
}

export interface ClassRow {
  class_key: string;
  size: number;
  flagged: number;
  reviewed: number;
}

export interface ClassesView {
  round: number;
  classes: ClassRow[];
}

export interface QueueItem {
  id: string;
  text: string;
  rank: number | null;
  score: number | null;
  verdict: VerdictLabel | null;
  seed_id: string | null;
  seed_text: string | null;
}

export interface OutliersPage {
  class_key: string;
  round: number;
  total_flagged: number;
  page: number;
  page_size: number;
  entries: QueueItem[];
}

export interface RoundClassStats {
  size: number;
  flagged: number;
  reviewed: number;
}

export interface RoundView {
  round: number;
  rounds_total: number;
  strategy: string;
  closed: boolean;
  flagged_total: number;
  reviewed: number;
  pending: number;
  can_close: boolean;
  classes: Record<string, RoundClassStats>;
}

export interface DiversityRound {
  round: number;
  samples: number;
  diversity: number;
}

export interface DiversityReport {
  max_ngram: number;
  rounds: DiversityRound[];
  overall: { samples: number; diversity: number };
}

export interface CoveragePair {
  train_round: number;
  test_round: number;
  coverage: number;
}

export interface CoverageReport {
  max_ngram: number;
  pairs: CoveragePair[];
}

export interface Disambiguation {
  round: number;
  candidate: { id: string; text: string; class_key: string };
  own_mean_distance: number;
  nearest: { id: string; text: string; class_key: string; distance: number };
  auto_keep: boolean;
  judgment: boolean | null;
}

export interface VerdictResult {
  status: "applied" | "unchanged";
  id: string;
  remaining: number;
}

export interface JudgmentResult {
  status: "applied" | "unchanged";
  id: string;
}

export interface CloseResult {
  status: "closed" | "unchanged";
  round: number;
  next_round: number | null;
}

/** A report body together with the exact text the service sent. */
export interface Raw<T> {
  parsed: T;
  raw: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  private readonly base: string;
  private readonly fetchFn: FetchFn;

  constructor(base: string, fetchFn?: FetchFn) {
    this.base = base.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async requestRaw(path: string, init?: RequestInit): Promise<string> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    const body = await response.text();
    if (!response.ok) {
      let detail = body;
      try {
        detail = String(JSON.parse(body).detail ?? body);
      } catch {
        // non-JSON error body: report it verbatim
      }
      throw new ApiError(response.status, detail);
    }
    return body;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    return JSON.parse(await this.requestRaw(path, init)) as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  info(): Promise<ServiceInfo> {
    return this.request<ServiceInfo>("/");
  }

  classes(): Promise<ClassesView> {
    return this.request<ClassesView>("/classes");
  }

  outliers(classKey: string, page = 0, pageSize = 50): Promise<OutliersPage> {
    const key = encodeURIComponent(classKey);
    return this.request<OutliersPage>(
      `/classes/${key}/outliers?page=${page}&page_size=${pageSize}`,
    );
  }

  /** Walk the pages until the whole flagged queue is in hand. */
  async allOutliers(classKey: string, pageSize = 50): Promise<QueueItem[]> {
    const items: QueueItem[] = [];
    for (let page = 0; ; page++) {
      const view = await this.outliers(classKey, page, pageSize);
      items.push(...view.entries);
      if (items.length >= view.total_flagged || view.entries.length === 0) {
        return items;
      }
    }
  }

  postVerdict(id: string, label: VerdictLabel): Promise<VerdictResult> {
    return this.post<VerdictResult>("/verdicts", { id, label });
  }

  disambiguation(id: string): Promise<Disambiguation> {
    return this.request<Disambiguation>(`/disambiguation/${encodeURIComponent(id)}`);
  }

  postJudgment(id: string, keep: boolean): Promise<JudgmentResult> {
    return this.post<JudgmentResult>("/disambiguation", { id, keep });
  }

  round(): Promise<RoundView> {
    return this.request<RoundView>("/round");
  }

  closeRound(): Promise<CloseResult> {
    return this.post<CloseResult>("/round/close", {});
  }

  async diversityReport(): Promise<Raw<DiversityReport>> {
    const raw = await this.requestRaw("/reports/diversity");
    return { parsed: JSON.parse(raw) as DiversityReport, raw };
  }

  async coverageReport(): Promise<Raw<CoverageReport>> {
    const raw = await this.requestRaw("/reports/coverage");
    return { parsed: JSON.parse(raw) as CoverageReport, raw };
  }
}
