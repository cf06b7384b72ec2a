// End-to-end blinding check: the fake server knows which system produced
// each slot, the client never does. Every rendered frame and every outbound
// request over a full three-review session is scanned for system names.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { AnswerCache, SessionController, SessionStore } from "../src/state";
import { render } from "../src/views";
import { FakeServer, MemoryStorage, threeReviewCorpus } from "./fakes";

const SYSTEM_IDS = ["model-alpha", "model-beta", "model-gamma"];

describe("blinding", () => {
  it("never leaks a system identifier into the UI or the wire", async () => {
    const server = new FakeServer(threeReviewCorpus());
    const storage = new MemoryStorage();
    const controller = new SessionController(
      new ApiClient("", server.fetch),
      new AnswerCache(storage),
      new SessionStore(storage),
    );

    const frames: string[] = [];
    const snap = (): void => {
      frames.push(render(controller.viewModel()));
    };

    snap();
    await controller.login("ann-1");
    snap();

    let tick = 0;
    let guard = 0;
    while (controller.viewModel().phase === "working") {
      guard += 1;
      if (guard > 60) throw new Error("flow did not terminate");
      const vm = controller.viewModel();
      for (const q of vm.questions ?? []) {
        tick += 1;
        const pick = q.options[tick % q.options.length];
        if (pick !== undefined) controller.select(q.question, String(pick.value));
        snap();
      }
      await controller.submitPage();
      snap();
    }

    const done = controller.viewModel();
    expect(done.phase).toBe("done");
    expect(done.progress).toEqual({ completed_reviews: 3, total_reviews: 3 });

    expect(frames.length).toBeGreaterThan(20);
    for (const frame of frames) {
      for (const system of SYSTEM_IDS) {
        expect(frame).not.toContain(system);
      }
    }
    for (const request of server.requests) {
      for (const system of SYSTEM_IDS) {
        expect(request.url).not.toContain(system);
        expect(request.body).not.toContain(system);
      }
    }
    // sanity: the scan would have caught a leak
    expect(frames.some((f) => f.includes("Candidate summary"))).toBe(true);
    expect(server.requests.some((r) => r.body.includes("relevance"))).toBe(true);

    // nothing in persistent storage names a system either
    for (const key of ["annotation-pending", "annotation-session"]) {
      const raw = storage.getItem(key);
      if (raw === null) continue;
      for (const system of SYSTEM_IDS) {
        expect(raw).not.toContain(system);
      }
    }
  });

  it("keeps the scan honest: a planted leak is detected", () => {
    const leaky = `<p>produced by model-beta</p>`;
    expect(SYSTEM_IDS.some((s) => leaky.includes(s))).toBe(true);
  });
});
