/**
 * Keyboard-first triage view over one class's flagged queue.
 *
 * j/k move the cursor, e marks an error, u marks a unique, d opens the
 * disambiguation pane for the cursor item, y/n answer it. Verdicts render
 * immediately and roll back with a message if the server refuses.
 */
import { ApiError, ReviewApi } from "./api.js";
import type { Disambiguation, QueueItem, VerdictLabel } from "./api.js";
import { TriageQueue } from "./state.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export class TriageController {
  readonly queue = new TriageQueue();
  selected = 0;
  message = "";
  pane: Disambiguation | null = null;
  onChange: (() => void) | null = null;

  private readonly doc: Document;

  constructor(
    private readonly container: HTMLElement,
    private readonly api: ReviewApi,
  ) {
    this.doc = container.ownerDocument;
  }

  async open(classKey: string): Promise<void> {
    const flagged = await this.api.allOutliers(classKey);
    this.queue.load(classKey, flagged);
    this.selected = 0;
    this.pane = null;
    this.message = "";
    this.render();
  }

  /** Re-fetch the queue; the server's verdicts decide what is still pending. */
  reload(): Promise<void> {
    return this.open(this.queue.classKey);
  }

  attach(): void {
    this.doc.addEventListener("keydown", (event) => {
      if (this.handleKey((event as KeyboardEvent).key)) {
        event.preventDefault();
      }
    });
  }

  /** Returns true when the key did something. */
  handleKey(key: string): boolean {
    switch (key) {
      case "j":
        this.moveCursor(1);
        return true;
      case "k":
        this.moveCursor(-1);
        return true;
      case "e":
        void this.verdictSelected("error");
        return true;
      case "u":
        void this.verdictSelected("unique");
        return true;
      case "d":
        void this.openPane();
        return true;
      case "y":
        void this.judge(true);
        return true;
      case "n":
        void this.judge(false);
        return true;
      case "Escape":
        this.pane = null;
        this.render();
        return true;
      default:
        return false;
    }
  }

  private moveCursor(step: number): void {
    const last = Math.max(0, this.queue.items.length - 1);
    this.selected = Math.min(last, Math.max(0, this.selected + step));
    this.render();
  }

  selectedItem(): QueueItem | null {
    return this.queue.items[this.selected] ?? null;
  }

  verdictSelected(label: VerdictLabel): Promise<void> {
    const item = this.selectedItem();
    return item ? this.verdict(item.id, label) : Promise.resolve();
  }

  async verdict(id: string, label: VerdictLabel): Promise<void> {
    const item = this.queue.apply(id, label);
    if (!item) {
      return;
    }
    this.selected = Math.min(this.selected, Math.max(0, this.queue.items.length - 1));
    this.message = "";
    this.render();
    try {
      await this.api.postVerdict(id, label);
      this.queue.confirm(id);
      this.onChange?.();
    } catch (err) {
      this.queue.rollback(id);
      this.message =
        err instanceof ApiError ? err.detail : `verdict failed: ${String(err)}`;
    }
    this.render();
  }

  private async openPane(): Promise<void> {
    const item = this.selectedItem();
    if (!item) {
      return;
    }
    try {
      this.pane = await this.api.disambiguation(item.id);
      this.message = "";
    } catch (err) {
      this.pane = null;
      this.message = err instanceof ApiError ? err.detail : String(err);
    }
    this.render();
  }

  private async judge(keep: boolean): Promise<void> {
    if (!this.pane) {
      return;
    }
    const id = this.pane.candidate.id;
    try {
      await this.api.postJudgment(id, keep);
      this.pane = { ...this.pane, judgment: keep };
      this.message = "";
    } catch (err) {
      this.message = err instanceof ApiError ? err.detail : String(err);
    }
    this.render();
  }

  render(): void {
    const q = this.queue;
    const pct = q.total === 0 ? 100 : Math.round((100 * q.reviewed) / q.total);
    const rows = q.items
      .map((item, i) => {
        const cls = i === this.selected ? "queue-item selected" : "queue-item";
        const seed =
          item.seed_text === null
            ? ""
            : `<span class="seed">from: ${esc(item.seed_text)}</span>`;
        return (
          `<li class="${cls}" data-id="${esc(item.id)}">` +
          `<span class="rank">#${item.rank ?? "?"}</span>` +
          `<span class="score">${item.score ?? ""}</span>` +
          `<span class="text">${esc(item.text)}</span>${seed}</li>`
        );
      })
      .join("");
    const seeds = q.uniques
      .map((item) => `<li data-id="${esc(item.id)}">${esc(item.text)}</li>`)
      .join("");
    this.container.innerHTML =
      `<h2 class="class-name">${esc(q.classKey)}</h2>` +
      `<div class="progress"><div class="progress-fill" style="width:${pct}%"></div>` +
      `<span class="progress-text">${q.reviewed} of ${q.total} reviewed</span></div>` +
      `<p class="message">${esc(this.message)}</p>` +
      `<ol class="queue">${rows}</ol>` +
      this.renderPane() +
      `<aside class="seed-panel"><h3>seed candidates</h3><ul>${seeds}</ul></aside>`;
  }

  private renderPane(): string {
    if (!this.pane) {
      return `<div class="disambiguation"></div>`;
    }
    const p = this.pane;
    const hint = p.auto_keep ? "closer to its own class" : "closer to the other class";
    const judged =
      p.judgment === null ? "[y] keep / [n] reject" : p.judgment ? "kept" : "rejected";
    return (
      `<div class="disambiguation" data-id="${esc(p.candidate.id)}">` +
      `<p class="candidate">${esc(p.candidate.text)} <em>(${esc(p.candidate.class_key)})</em></p>` +
      `<p class="nearest">vs ${esc(p.nearest.text)} <em>(${esc(p.nearest.class_key)})</em></p>` +
      `<p class="hint">${hint}</p><p class="judgment">${judged}</p></div>`
    );
  }
}
