/**
 * Round dashboard: per-class review counts, the diversity/coverage tables,
 * a diversity trend chart, and the close-round button.
 *
 * Numbers in the tables are the service's own JSON literals, lifted from
 * the raw response text, so what the reviewer reads is exactly what the
 * report routes said.
 */
import { ApiError, ReviewApi } from "./api.js";
import type { CoverageReport, DiversityReport, Raw, RoundView } from "./api.js";

const NUMBER = String.raw`-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?`;

/** JSON number literals following `"key":`, in document order. */
export function numberTokens(raw: string, key: string): string[] {
  const pattern = new RegExp(`"${key}"\\s*:\\s*(${NUMBER})`, "g");
  const tokens: string[] = [];
  for (const match of raw.matchAll(pattern)) {
    tokens.push(match[1]);
  }
  return tokens;
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export class DashboardController {
  round: RoundView | null = null;
  diversity: Raw<DiversityReport> | null = null;
  coverage: Raw<CoverageReport> | null = null;
  message = "";
  onClosed: (() => void) | null = null;

  constructor(
    private readonly container: HTMLElement,
    private readonly api: ReviewApi,
  ) {}

  async refresh(): Promise<void> {
    this.round = await this.api.round();
    this.diversity = await this.api.diversityReport();
    this.coverage = await this.api.coverageReport();
    this.render();
  }

  async close(): Promise<void> {
    try {
      await this.api.closeRound();
      this.message = "";
      await this.refresh();
      this.onClosed?.();
    } catch (err) {
      this.message = err instanceof ApiError ? err.detail : String(err);
      this.render();
    }
  }

  render(): void {
    if (!this.round || !this.diversity || !this.coverage) {
      this.container.innerHTML = "";
      return;
    }
    const r = this.round;
    const closeLabel = r.closed
      ? "round closed"
      : r.can_close
        ? "close round"
        : `close round (${r.pending} pending)`;
    const disabled = r.can_close ? "" : " disabled";
    this.container.innerHTML =
      `<h2>round ${r.round} of ${r.rounds_total} <em>(${esc(r.strategy)})</em></h2>` +
      `<p class="message">${esc(this.message)}</p>` +
      this.renderClasses(r) +
      this.renderDiversity() +
      this.renderCoverage() +
      this.renderTrend() +
      `<button class="close-round"${disabled}>${closeLabel}</button>`;
    const button = this.container.querySelector("button.close-round");
    button?.addEventListener("click", () => void this.close());
  }

  private renderClasses(r: RoundView): string {
    const rows = Object.entries(r.classes)
      .map(
        ([key, stats]) =>
          `<tr><td>${esc(key)}</td><td>${stats.size}</td>` +
          `<td>${stats.flagged}</td><td>${stats.reviewed}</td></tr>`,
      )
      .join("");
    return (
      `<table class="classes"><thead><tr><th>class</th><th>size</th>` +
      `<th>flagged</th><th>reviewed</th></tr></thead><tbody>${rows}</tbody></table>`
    );
  }

  private renderDiversity(): string {
    const report = this.diversity!;
    const values = numberTokens(report.raw, "diversity");
    const samples = numberTokens(report.raw, "samples");
    const rows = report.parsed.rounds
      .map(
        (row, i) =>
          `<tr><td>round ${row.round}</td><td>${samples[i]}</td>` +
          `<td class="diversity-value">${values[i]}</td></tr>`,
      )
      .join("");
    const overallSamples = samples[report.parsed.rounds.length];
    const overall = values[report.parsed.rounds.length];
    return (
      `<table class="diversity"><thead><tr><th>round</th><th>samples</th>` +
      `<th>diversity</th></tr></thead><tbody>${rows}` +
      `<tr class="overall"><td>overall</td><td>${overallSamples}</td>` +
      `<td class="diversity-value">${overall}</td></tr></tbody></table>`
    );
  }

  private renderCoverage(): string {
    const report = this.coverage!;
    if (report.parsed.pairs.length === 0) {
      return `<table class="coverage"></table>`;
    }
    const values = numberTokens(report.raw, "coverage");
    const rows = report.parsed.pairs
      .map(
        (pair, i) =>
          `<tr><td>round ${pair.train_round} &rarr; round ${pair.test_round}</td>` +
          `<td class="coverage-value">${values[i]}</td></tr>`,
      )
      .join("");
    return (
      `<table class="coverage"><thead><tr><th>pair</th><th>coverage</th>` +
      `</tr></thead><tbody>${rows}</tbody></table>`
    );
  }

  private renderTrend(): string {
    // geometry only; the numbers themselves live in the table above
    const rounds = this.diversity!.parsed.rounds;
    if (rounds.length === 0) {
      return `<svg class="trend" viewBox="0 0 300 120"></svg>`;
    }
    const width = 300;
    const height = 120;
    const pad = 10;
    const values = rounds.map((row) => row.diversity);
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    const span = hi - lo || 1;
    const x = (i: number) =>
      rounds.length === 1
        ? width / 2
        : pad + (i * (width - 2 * pad)) / (rounds.length - 1);
    const y = (v: number) => height - pad - ((v - lo) * (height - 2 * pad)) / span;
    const points = values.map((v, i) => `${x(i)},${y(v)}`).join(" ");
    const dots = values
      .map((v, i) => `<circle class="trend-point" cx="${x(i)}" cy="${y(v)}" r="3"/>`)
      .join("");
    return (
      `<svg class="trend" viewBox="0 0 ${width} ${height}">` +
      `<polyline class="trend-line" fill="none" points="${points}"/>${dots}</svg>`
    );
  }
}
