import { describe, expect, it } from "vitest";
import { ApiError, ReviewApi } from "../src/api.js";
import type { FetchFn } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function recordingFetch(responder: (url: string) => { status?: number; body: string }) {
  const calls: Call[] = [];
  const fetchFn: FetchFn = async (url, init) => {
    calls.push({ url, init });
    const { status = 200, body } = responder(url);
    return new Response(body, { status });
  };
  return { calls, fetchFn };
}

describe("ReviewApi", () => {
  it("strips trailing slashes from the base url", async () => {
    const { calls, fetchFn } = recordingFetch(() => ({
      body: `{"service":"textsieve-review","round":1,"strategy":"unique"}`,
    }));
    const api = new ReviewApi("http://host:9//", fetchFn);
    const info = await api.info();
    expect(calls[0].url).toBe("http://host:9/");
    expect(info.round).toBe(1);
  });

  it("encodes class keys and paging in the outliers url", async () => {
    const { calls, fetchFn } = recordingFetch(() => ({
      body: `{"class_key":"a b","round":1,"total_flagged":0,"page":2,"page_size":10,"entries":[]}`,
    }));
    await new ReviewApi("http://h", fetchFn).outliers("a b", 2, 10);
    expect(calls[0].url).toBe("http://h/classes/a%20b/outliers?page=2&page_size=10");
  });

  it("posts verdicts as json", async () => {
    const { calls, fetchFn } = recordingFetch(() => ({
      body: `{"status":"applied","id":"u1","remaining":4}`,
    }));
    const result = await new ReviewApi("http://h", fetchFn).postVerdict("u1", "error");
    expect(result.remaining).toBe(4);
    expect(calls[0].url).toBe("http://h/verdicts");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ id: "u1", label: "error" });
  });

  it("maps service errors to ApiError with the detail text", async () => {
    const { fetchFn } = recordingFetch(() => ({
      status: 409,
      body: `{"detail":"id 'u1' already reviewed as 'error' this round"}`,
    }));
    const api = new ReviewApi("http://h", fetchFn);
    const err = await api.postVerdict("u1", "unique").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.detail).toContain("already reviewed");
  });

  it("falls back to the raw body when an error is not json", async () => {
    const { fetchFn } = recordingFetch(() => ({ status: 500, body: "boom" }));
    const err = await new ReviewApi("http://h", fetchFn).round().catch((e) => e);
    expect(err.detail).toBe("boom");
  });

  it("stitches outlier pages together in order", async () => {
    const pages = [
      `{"class_key":"c","round":1,"total_flagged":3,"page":0,"page_size":2,"entries":[` +
        `{"id":"a","text":"a","rank":1,"score":2.0,"verdict":null,"seed_id":null,"seed_text":null},` +
        `{"id":"b","text":"b","rank":2,"score":1.0,"verdict":null,"seed_id":null,"seed_text":null}]}`,
      `{"class_key":"c","round":1,"total_flagged":3,"page":1,"page_size":2,"entries":[` +
        `{"id":"c","text":"c","rank":3,"score":0.5,"verdict":null,"seed_id":null,"seed_text":null}]}`,
    ];
    const { calls, fetchFn } = recordingFetch((url) => ({
      body: pages[Number(new URL(url).searchParams.get("page"))],
    }));
    const items = await new ReviewApi("http://h", fetchFn).allOutliers("c", 2);
    expect(items.map((item) => item.id)).toEqual(["a", "b", "c"]);
    expect(calls.length).toBe(2);
  });

  it("keeps the exact raw text of report bodies", async () => {
    const raw = `{"max_ngram":3,"rounds":[{"round":1,"samples":10,"diversity":1.0}],"overall":{"samples":10,"diversity":1.0}}`;
    const { fetchFn } = recordingFetch(() => ({ body: raw }));
    const report = await new ReviewApi("http://h", fetchFn).diversityReport();
    expect(report.raw).toBe(raw);
    expect(report.parsed.overall.diversity).toBe(1);
  });
});
