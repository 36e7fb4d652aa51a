import { describe, expect, it } from "vitest";

import { ApiClient, InstancePayload } from "../src/api.js";
import { AnnotationSession } from "../src/session.js";

const OPTIONS = [
  { value: 1, label: "Very Easy", description: "desc one from server" },
  { value: 2, label: "Easy", description: "desc two from server" },
  { value: 3, label: "Neutral", description: "desc three from server" },
  { value: 4, label: "Difficult", description: "desc four from server" },
  { value: 5, label: "Very Difficult", description: "desc five from server" },
];

function payload(id: string): InstancePayload {
  return {
    schema_version: "annot-v1",
    instance_id: id,
    genre: "bible",
    sentence: `the word${id} stood`,
    target_start: 4,
    target_end: 4 + `word${id}`.length,
    surface: `word${id}`,
    is_mwe: false,
    batch: 0,
    options: OPTIONS,
  };
}

interface FakeServer {
  client: ApiClient;
  submits: Array<{ instance_id: string; likert: number; elapsed_ms: number }>;
  calls: { next: number; submit: number };
}

function fakeServer(opts: {
  queue: string[];
  submitStatus?: (n: number) => number;
  nextStatus?: number;
}): FakeServer {
  const state = {
    submits: [] as Array<{ instance_id: string; likert: number; elapsed_ms: number }>,
    calls: { next: 0, submit: 0 },
  };
  const respond = (status: number, body: unknown): Response =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });

  const fetchImpl = async (input: string, init?: RequestInit): Promise<Response> => {
    if (input.includes("/api/next")) {
      state.calls.next += 1;
      if (opts.nextStatus && opts.nextStatus !== 200) {
        return respond(opts.nextStatus, { error: "bad token" });
      }
      const id = opts.queue.shift();
      return respond(200, id === undefined ? { done: true } : payload(id));
    }
    if (input.includes("/api/submit")) {
      state.calls.submit += 1;
      const body = JSON.parse(String(init?.body));
      const status = opts.submitStatus?.(state.calls.submit) ?? 200;
      if (status !== 200) {
        return respond(status, { error: "conflict" });
      }
      state.submits.push(body);
      return respond(200, { accepted: true, instance_id: body.instance_id, collected: 1 });
    }
    throw new Error(`unexpected request ${input}`);
  };
  return { client: new ApiClient("", fetchImpl), ...state };
}

describe("annotation session", () => {
  it("walks fetch -> select -> submit and advances", async () => {
    const server = fakeServer({ queue: ["a", "b"] });
    const session = new AnnotationSession(server.client, "tok");
    await session.loadNext();
    expect(session.state.kind).toBe("annotating");
    expect(session.canSubmit).toBe(false); // nothing selected yet

    session.select(3);
    expect(session.canSubmit).toBe(true);
    await session.submit();
    expect(server.submits).toHaveLength(1);
    expect(server.submits[0].likert).toBe(3);
    expect(session.submittedCount).toBe(1);
    expect(session.state.kind).toBe("annotating"); // advanced to "b"
  });

  it("reaches the completion state when the queue is exhausted", async () => {
    const server = fakeServer({ queue: ["only"] });
    const session = new AnnotationSession(server.client, "tok");
    await session.loadNext();
    session.select(2);
    await session.submit();
    expect(session.state.kind).toBe("done");
  });

  it("rejects selecting a value the server did not offer", async () => {
    const server = fakeServer({ queue: ["a"] });
    const session = new AnnotationSession(server.client, "tok");
    await session.loadNext();
    expect(() => session.select(9)).toThrow(/unknown option/);
  });

  it("sends exactly one record per instance on double submit", async () => {
    const server = fakeServer({ queue: ["a"] });
    const session = new AnnotationSession(server.client, "tok");
    await session.loadNext();
    session.select(4);
    // a double click fires two submits before the first resolves
    const [first, second] = await Promise.all([session.submit(), session.submit()]);
    expect(server.calls.submit).toBe(1);
    expect([first, second].filter(Boolean)).toHaveLength(1);
    expect(session.submittedCount).toBe(1);
  });

  it("advances past a 409 conflict without retrying", async () => {
    const notices: string[] = [];
    const server = fakeServer({ queue: ["a", "b"], submitStatus: (n) => (n === 1 ? 409 : 200) });
    const session = new AnnotationSession(server.client, "tok", {
      onNotice: (m) => notices.push(m),
    });
    await session.loadNext();
    session.select(1);
    await session.submit();
    expect(session.submittedCount).toBe(0); // nothing recorded
    expect(notices).toHaveLength(1);
    expect(session.state.kind).toBe("annotating"); // moved on to "b"
    expect(server.calls.submit).toBe(1); // no retry of the conflicted POST
  });

  it("routes an invalid token to the login state", async () => {
    const server = fakeServer({ queue: [], nextStatus: 401 });
    const session = new AnnotationSession(server.client, "tok");
    await session.loadNext();
    expect(session.state.kind).toBe("login");
  });

  it("surfaces network failures as a retryable error state", async () => {
    const failing = new ApiClient("", async () => {
      throw new Error("connection refused");
    });
    const session = new AnnotationSession(failing, "tok");
    await session.loadNext();
    expect(session.state.kind).toBe("error");
    expect(session.submittedCount).toBe(0);
  });

  it("reports elapsed time no less than render-to-submit wall time", async () => {
    let clock = 1000;
    const server = fakeServer({ queue: ["a"] });
    const session = new AnnotationSession(server.client, "tok", {}, () => clock);
    await session.loadNext();
    clock += 7321; // annotator thinks for 7.321s
    session.select(5);
    await session.submit();
    const reported = server.submits[0].elapsed_ms;
    expect(reported).toBeGreaterThanOrEqual(7321 - 50);
    expect(reported).toBe(7321); // same clock: exact here
  });
});
