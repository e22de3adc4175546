// Annotation flow behavior against a scripted in-memory service.

import { describe, expect, it } from "vitest";
import { ApiClient, FetchLike } from "../src/api.js";
import { AnnotationFlow, DIMENSIONS } from "../src/flow.js";

interface MockOptions {
  nTasks?: number;
  rejectWith?: { status: number; error: string } | null;
  failNetwork?: boolean;
}

function makeService(options: MockOptions = {}) {
  const nTasks = options.nTasks ?? 2;
  const submitted: Array<Record<string, unknown>> = [];
  let scored = 0;

  const fetchFn: FetchLike = async (url, init) => {
    if (options.failNetwork) {
      throw new Error("connection refused");
    }
    const json = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
      });
    if (url.includes("/next")) {
      if (scored >= nTasks) {
        return json({ done: true, total: nTasks, scored, pending: 0 });
      }
      return json({
        done: false,
        total: nTasks,
        scored,
        pending: nTasks - scored,
        task: {
          task_id: `t-${scored}`,
          sample_id: `s${scored}`,
          question: `question ${scored}?`,
          generated: `answer ${scored}`,
        },
      });
    }
    if (url.includes("/annotations")) {
      if (options.rejectWith) {
        return json({ error: options.rejectWith.error }, options.rejectWith.status);
      }
      submitted.push(JSON.parse(String(init?.body)));
      scored += 1;
      return json({ ok: true, task_id: "t", replaced: false });
    }
    throw new Error(`unexpected url ${url}`);
  };

  return { fetchFn, submitted };
}

function rateAll(flow: AnnotationFlow, values = [4, 4, 5, 3]) {
  DIMENSIONS.forEach((dimension, i) => flow.setRating(dimension, values[i]));
}

describe("AnnotationFlow", () => {
  it("disables submit until all four dimensions are selected", async () => {
    const { fetchFn } = makeService();
    const flow = new AnnotationFlow(new ApiClient("http://svc", fetchFn), "s1", "alice");
    await flow.start();
    expect(flow.canSubmit()).toBe(false);
    flow.setRating("relevance", 4);
    flow.setRating("readability", 4);
    flow.setRating("truthfulness", 5);
    expect(flow.canSubmit()).toBe(false);
    flow.setRating("usability", 3);
    expect(flow.canSubmit()).toBe(true);
  });

  it("transmits exactly the selected integers", async () => {
    const { fetchFn, submitted } = makeService();
    const flow = new AnnotationFlow(new ApiClient("http://svc", fetchFn), "s1", "alice");
    await flow.start();
    rateAll(flow, [1, 2, 3, 4]);
    await flow.submit();
    expect(submitted).toHaveLength(1);
    expect(submitted[0].ratings).toEqual({
      relevance: 1,
      readability: 2,
      truthfulness: 3,
      usability: 4,
    });
    for (const value of Object.values(submitted[0].ratings as Record<string, unknown>)) {
      expect(Number.isInteger(value)).toBe(true);
    }
  });

  it("rejects out-of-range ratings client-side", async () => {
    const { fetchFn } = makeService();
    const flow = new AnnotationFlow(new ApiClient("http://svc", fetchFn), "s1", "alice");
    await flow.start();
    expect(() => flow.setRating("relevance", 0)).toThrow();
    expect(() => flow.setRating("relevance", 6)).toThrow();
    expect(() => flow.setRating("relevance", 3.5)).toThrow();
  });

  it("surfaces service rejection inline and keeps the entered ratings", async () => {
    const { fetchFn } = makeService({ rejectWith: { status: 400, error: "rating outside 1..5" } });
    const flow = new AnnotationFlow(new ApiClient("http://svc", fetchFn), "s1", "alice");
    await flow.start();
    rateAll(flow);
    const state = await flow.submit();
    expect(state.phase).toBe("rating");
    expect(state.error).toContain("rating outside 1..5");
    expect(state.ratings).toEqual({ relevance: 4, readability: 4, truthfulness: 5, usability: 3 });
  });

  it("advances through the queue and ends on the done screen", async () => {
    const { fetchFn } = makeService({ nTasks: 3 });
    const flow = new AnnotationFlow(new ApiClient("http://svc", fetchFn), "s1", "alice");
    let state = await flow.start();
    while (state.phase === "rating") {
      rateAll(flow);
      state = await flow.submit();
    }
    expect(state.phase).toBe("done");
    expect(state.scored).toBe(3);
    expect(state.total).toBe(3);
  });

  it("reports network failure without losing ratings", async () => {
    const good = makeService();
    const flow = new AnnotationFlow(new ApiClient("http://svc", good.fetchFn), "s1", "alice");
    await flow.start();
    rateAll(flow);
    // swap in a failing transport for the submit
    const bad = makeService({ failNetwork: true });
    (flow as unknown as { client: ApiClient }).client = new ApiClient("http://svc", bad.fetchFn);
    const state = await flow.submit();
    expect(state.error).toContain("network failure");
    expect(state.ratings.usability).toBe(3);
  });
});
