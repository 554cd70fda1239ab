import type { QueueItem, VerdictLabel } from "./api.js";

interface InFlight {
  item: QueueItem;
  index: number;
  label: VerdictLabel;
}

/**
 * Client-side triage state for one class queue.
 *
 * Verdicts apply optimistically: the item leaves the queue (and the bar
 * advances) before the server answers. A rejection puts it back exactly
 * where it was. Items the server already knows verdicts for never enter
 * the queue, so a mid-session reload shows the same remaining work.
 */
export class TriageQueue {
  classKey = "";
  total = 0;
  reviewed = 0;
  items: QueueItem[] = [];
  uniques: QueueItem[] = [];
  private inFlight = new Map<string, InFlight>();

  load(classKey: string, flagged: QueueItem[]): void {
    this.classKey = classKey;
    this.total = flagged.length;
    this.items = flagged.filter((item) => item.verdict === null);
    this.uniques = flagged.filter((item) => item.verdict === "unique");
    this.reviewed = this.total - this.items.length;
    this.inFlight.clear();
  }

  get pending(): number {
    return this.items.length;
  }

  get inFlightCount(): number {
    return this.inFlight.size;
  }

  indexOf(id: string): number {
    return this.items.findIndex((item) => item.id === id);
  }

  /** Remove the item from the queue and count it reviewed; returns null for unknown ids. */
  apply(id: string, label: VerdictLabel): QueueItem | null {
    const index = this.indexOf(id);
    if (index < 0 || this.inFlight.has(id)) {
      return null;
    }
    const [item] = this.items.splice(index, 1);
    this.inFlight.set(id, { item, index, label });
    this.reviewed += 1;
    if (label === "unique") {
      this.uniques.push(item);
    }
    return item;
  }

  confirm(id: string): void {
    this.inFlight.delete(id);
  }

  /** Undo an optimistic apply after a server rejection. */
  rollback(id: string): QueueItem | null {
    const entry = this.inFlight.get(id);
    if (!entry) {
      return null;
    }
    this.inFlight.delete(id);
    this.reviewed -= 1;
    if (entry.label === "unique") {
      this.uniques = this.uniques.filter((item) => item.id !== id);
    }
    const at = Math.min(entry.index, this.items.length);
    this.items.splice(at, 0, entry.item);
    return entry.item;
  }
}
