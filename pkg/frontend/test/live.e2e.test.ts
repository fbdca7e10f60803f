// Optional end-to-end run against a live service over real HTTP.
// Start one with `minimon serve --port 8000 --session-dir /tmp/arena` and run:
//   ARENA_URL=http://127.0.0.1:8000 vitest run test/live.e2e.test.ts

import { describe, expect, it } from "vitest";

import { ArenaApi } from "../src/api.js";
import { SessionFlow } from "../src/flow.js";

const baseUrl = process.env.ARENA_URL;

describe.skipIf(!baseUrl)("live service", () => {
  it("plays a full battle to the result screen", async () => {
    const flow = new SessionFlow(new ArenaApi(baseUrl!));
    await flow.startBattle("heuristic", false, 20260809);
    expect(flow.state.screen).toBe("battle");

    let sawReplacement = false;
    for (let step = 0; step < 300 && flow.state.phase !== "finished"; step++) {
      if (flow.state.phase === "awaiting_replacement") sawReplacement = true;
      await flow.chooseAction(flow.state.legal[0]);
      expect(flow.state.notice).toBeNull();
    }
    expect(flow.state.phase).toBe("finished");

    // a deliberately illegal follow-up is rejected without desync
    await flow.chooseAction({ action: "move", value: "Nonsense" });
    expect(flow.state.notice).not.toBeNull();

    await flow.openResult();
    expect(flow.state.screen).toBe("result");
    expect(flow.state.log?.teams).toBeDefined();
    await flow.submitRating(3);
    expect(flow.state.ratingSubmitted).toBe(3);
    expect(typeof sawReplacement).toBe("boolean"); // informational for this seed
  }, 30_000);
});
