import { describe, expect, it } from "vitest";
import type { QueueItem } from "../src/api.js";
import { TriageQueue } from "../src/state.js";

function item(id: string, verdict: QueueItem["verdict"] = null): QueueItem {
  return { id, text: `text ${id}`, rank: 1, score: 0.5, verdict, seed_id: null, seed_text: null };
}

describe("TriageQueue", () => {
  it("only queues items without a server-side verdict", () => {
    const queue = new TriageQueue();
    queue.load("c", [item("a", "error"), item("b"), item("d", "unique"), item("e")]);
    expect(queue.items.map((x) => x.id)).toEqual(["b", "e"]);
    expect(queue.total).toBe(4);
    expect(queue.reviewed).toBe(2);
    expect(queue.uniques.map((x) => x.id)).toEqual(["d"]);
  });

  it("applies optimistically and confirms", () => {
    const queue = new TriageQueue();
    queue.load("c", [item("a"), item("b")]);
    const applied = queue.apply("a", "unique");
    expect(applied?.id).toBe("a");
    expect(queue.items.map((x) => x.id)).toEqual(["b"]);
    expect(queue.reviewed).toBe(1);
    expect(queue.uniques.map((x) => x.id)).toEqual(["a"]);
    expect(queue.inFlightCount).toBe(1);
    queue.confirm("a");
    expect(queue.inFlightCount).toBe(0);
  });

  it("ignores unknown ids and double-applies", () => {
    const queue = new TriageQueue();
    queue.load("c", [item("a")]);
    expect(queue.apply("zz", "error")).toBeNull();
    queue.apply("a", "error");
    expect(queue.apply("a", "unique")).toBeNull();
  });

  it("rolls a rejected verdict back to its old position", () => {
    const queue = new TriageQueue();
    queue.load("c", [item("a"), item("b"), item("d")]);
    queue.apply("b", "unique");
    expect(queue.items.map((x) => x.id)).toEqual(["a", "d"]);
    const restored = queue.rollback("b");
    expect(restored?.id).toBe("b");
    expect(queue.items.map((x) => x.id)).toEqual(["a", "b", "d"]);
    expect(queue.reviewed).toBe(0);
    expect(queue.uniques).toEqual([]);
    expect(queue.rollback("b")).toBeNull();
  });

  it("clamps the restore position when the queue shrank meanwhile", () => {
    const queue = new TriageQueue();
    queue.load("c", [item("a"), item("b"), item("d")]);
    queue.apply("d", "error");
    queue.apply("a", "error");
    queue.confirm("a");
    const restored = queue.rollback("d");
    expect(restored?.id).toBe("d");
    expect(queue.items.map((x) => x.id)).toEqual(["b", "d"]);
  });
});
