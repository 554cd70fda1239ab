// @vitest-environment happy-dom
import { beforeEach, describe, expect, it } from "vitest";
import { ReviewApi } from "../src/api.js";
import type { FetchFn } from "../src/api.js";
import { DashboardController, numberTokens } from "../src/dashboard.js";

const DIVERSITY_ONE_ROUND =
  `{"max_ngram":3,"rounds":[{"round":1,"samples":97,"diversity":0.9273150000000001}],` +
  `"overall":{"samples":97,"diversity":1.0}}`;

const DIVERSITY_TWO_ROUNDS =
  `{"max_ngram":3,"rounds":[{"round":1,"samples":97,"diversity":0.91},` +
  `{"round":2,"samples":140,"diversity":0.93}],"overall":{"samples":230,"diversity":0.92}}`;

const COVERAGE_EMPTY = `{"max_ngram":3,"pairs":[]}`;
const COVERAGE_ONE = `{"max_ngram":3,"pairs":[{"train_round":1,"test_round":2,"coverage":0.25}]}`;

interface Script {
  round: string;
  diversity: string;
  coverage: string;
}

function mockService(script: Script) {
  const closes: number[] = [];
  const fetchFn: FetchFn = async (url, init) => {
    const path = new URL(url).pathname;
    if (path === "/round") {
      return new Response(script.round);
    }
    if (path === "/reports/diversity") {
      return new Response(script.diversity);
    }
    if (path === "/reports/coverage") {
      return new Response(script.coverage);
    }
    if (path === "/round/close" && init?.method === "POST") {
      closes.push(1);
      return new Response(`{"status":"closed","round":1,"next_round":null}`);
    }
    throw new Error(`unexpected url ${url}`);
  };
  return { closes, fetchFn };
}

function roundBody(pending: number, closed = false): string {
  return JSON.stringify({
    round: 1,
    rounds_total: 1,
    strategy: "unique",
    closed,
    flagged_total: 10,
    reviewed: 10 - pending,
    pending,
    can_close: pending === 0 && !closed,
    classes: { greet: { size: 50, flagged: 10, reviewed: 10 - pending } },
  });
}

describe("numberTokens", () => {
  it("returns the literals in document order", () => {
    expect(numberTokens(DIVERSITY_TWO_ROUNDS, "diversity")).toEqual(["0.91", "0.93", "0.92"]);
    expect(numberTokens(DIVERSITY_TWO_ROUNDS, "samples")).toEqual(["97", "140", "230"]);
  });

  it("does not confuse keys that share a suffix", () => {
    expect(numberTokens(COVERAGE_ONE, "round")).toEqual([]);
    expect(numberTokens(COVERAGE_ONE, "coverage")).toEqual(["0.25"]);
  });
});

describe("DashboardController", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = `<div id="root"></div>`;
    root = document.querySelector<HTMLElement>("#root")!;
  });

  it("shows diversity exactly as the service wrote it", async () => {
    const { fetchFn } = mockService({
      round: roundBody(0),
      diversity: DIVERSITY_ONE_ROUND,
      coverage: COVERAGE_EMPTY,
    });
    const controller = new DashboardController(root, new ReviewApi("http://h", fetchFn));
    await controller.refresh();
    const cells = [...root.querySelectorAll(".diversity-value")].map(
      (cell) => cell.textContent,
    );
    // "1.0" must not collapse to "1": the table echoes the raw JSON literal
    expect(cells).toEqual(["0.9273150000000001", "1.0"]);
  });

  it("disables the close button and shows the remaining count", async () => {
    const { fetchFn } = mockService({
      round: roundBody(3),
      diversity: DIVERSITY_ONE_ROUND,
      coverage: COVERAGE_EMPTY,
    });
    const controller = new DashboardController(root, new ReviewApi("http://h", fetchFn));
    await controller.refresh();
    const button = root.querySelector<HTMLButtonElement>("button.close-round")!;
    expect(button.disabled).toBe(true);
    expect(button.textContent).toBe("close round (3 pending)");
  });

  it("closes the round from the button when the queue is empty", async () => {
    const script = {
      round: roundBody(0),
      diversity: DIVERSITY_ONE_ROUND,
      coverage: COVERAGE_EMPTY,
    };
    const { closes, fetchFn } = mockService(script);
    const controller = new DashboardController(root, new ReviewApi("http://h", fetchFn));
    await controller.refresh();
    const button = root.querySelector<HTMLButtonElement>("button.close-round")!;
    expect(button.disabled).toBe(false);
    script.round = roundBody(0, true);
    await controller.close();
    expect(closes.length).toBe(1);
    expect(root.querySelector("button.close-round")!.textContent).toBe("round closed");
  });

  it("draws a single-point trend for one closed round", async () => {
    const { fetchFn } = mockService({
      round: roundBody(0, true),
      diversity: DIVERSITY_ONE_ROUND,
      coverage: COVERAGE_EMPTY,
    });
    const controller = new DashboardController(root, new ReviewApi("http://h", fetchFn));
    await controller.refresh();
    expect(root.querySelectorAll(".trend-point").length).toBe(1);
  });

  it("renders coverage pairs with the raw literals", async () => {
    const { fetchFn } = mockService({
      round: roundBody(0, true),
      diversity: DIVERSITY_TWO_ROUNDS,
      coverage: COVERAGE_ONE,
    });
    const controller = new DashboardController(root, new ReviewApi("http://h", fetchFn));
    await controller.refresh();
    const cells = [...root.querySelectorAll(".coverage-value")].map(
      (cell) => cell.textContent,
    );
    expect(cells).toEqual(["0.25"]);
    expect(root.querySelectorAll(".trend-point").length).toBe(2);
  });
});
