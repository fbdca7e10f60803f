// Contract tests: replay a recorded service transcript through the session
// flow. The fake fetch verifies every request the client makes (method, path,
// body) against what the real service answered during recording, so any drift
// from the service contract fails here.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { ArenaApi, type FetchLike } from "../src/api.js";
import { SessionFlow, describeTurn } from "../src/flow.js";
import { renderApp, renderBattle } from "../src/render.js";
import type { Action } from "../src/types.js";

interface TranscriptEntry {
  method: string;
  path: string;
  request: unknown;
  status: number;
  response: unknown;
}

interface Transcript {
  meta: {
    opponent: string;
    seed: number;
    illegal_action: Action;
    saw_replacement: boolean;
    winner: string | null;
  };
  entries: TranscriptEntry[];
}

const transcript: Transcript = JSON.parse(
  readFileSync(new URL("./fixtures/transcript.json", import.meta.url), "utf-8"),
);

class TranscriptFetch {
  private cursor = 0;

  constructor(private readonly entries: TranscriptEntry[]) {}

  get remaining(): number {
    return this.entries.length - this.cursor;
  }

  fetch: FetchLike = async (url, init) => {
    const expected = this.entries[this.cursor];
    if (!expected) {
      throw new Error(`unexpected extra request: ${init?.method ?? "GET"} ${url}`);
    }
    this.cursor += 1;
    expect(init?.method ?? "GET").toBe(expected.method);
    expect(url).toBe(expected.path);
    const body = init?.body ? JSON.parse(init.body as string) : null;
    expect(body).toEqual(expected.request);
    return {
      status: expected.status,
      json: async () => expected.response,
    };
  };
}

describe("scripted session against the recorded service", () => {
  it("completes a full battle with 422 handling, replacement dialog, and result screen", async () => {
    const net = new TranscriptFetch(transcript.entries);
    const api = new ArenaApi("", net.fetch);
    const flow = new SessionFlow(api);

    await flow.startBattle(transcript.meta.opponent, false, transcript.meta.seed);
    expect(flow.state.screen).toBe("battle");
    expect(flow.state.sessionId).not.toBeNull();
    expect(flow.state.legal.length).toBeGreaterThan(0);

    // deliberately illegal submission: inline notice, view re-synced, no desync
    await flow.chooseAction(transcript.meta.illegal_action);
    expect(flow.state.notice).toContain("illegal-action");
    expect(flow.state.screen).toBe("battle");
    expect(flow.state.phase).toBe("awaiting_human");
    expect(flow.state.legal.length).toBeGreaterThan(0);

    let sawReplacementDialog = false;
    for (let step = 0; step < 300 && flow.state.phase !== "finished"; step++) {
      if (flow.state.phase === "awaiting_replacement") {
        sawReplacementDialog = true;
        // the dialog offers only the service's switch options
        const html = renderBattle(flow.state);
        expect(html).toContain("replacement-dialog");
        expect(flow.state.legal.every((a) => a.action === "switch")).toBe(true);
      }
      await flow.chooseAction(flow.state.legal[0]);
      expect(flow.state.notice).toBeNull();
    }

    expect(flow.state.phase).toBe("finished");
    expect(sawReplacementDialog).toBe(transcript.meta.saw_replacement);
    expect(sawReplacementDialog).toBe(true);

    await flow.openResult();
    expect(flow.state.screen).toBe("result");
    expect(flow.state.result?.winner).toBe(transcript.meta.winner);
    expect(flow.state.log?.teams).toBeDefined(); // bench revealed only after finish

    await flow.submitRating(4);
    expect(flow.state.ratingSubmitted).toBe(4);

    expect(net.remaining).toBe(0); // the whole recording was consumed, nothing extra
  });

  it("keeps the battle feed in step with turn records", async () => {
    const net = new TranscriptFetch(transcript.entries);
    const flow = new SessionFlow(new ArenaApi("", net.fetch));
    await flow.startBattle(transcript.meta.opponent, false, transcript.meta.seed);
    await flow.chooseAction(transcript.meta.illegal_action);
    const before = flow.state.feed.length;
    await flow.chooseAction(flow.state.legal[0]);
    expect(flow.state.feed.length).toBeGreaterThan(before);
    expect(flow.state.feed[before]).toMatch(/^— Turn 1 —$/);
  });
});

describe("turn descriptions", () => {
  const baseSide = {
    active: "Sparky",
    action: { action: "move", value: "Jolt" } as Action,
    executed: true,
    accuracy_roll: 10,
    hit: true,
    crit: false,
    damage: 23,
    immobilized: false,
    pp_spent: true,
    status_applied: null,
    poison_damage: 0,
    active_after: "Sparky",
    hp_after: 50,
    telemetry: null,
  };

  it("describes hits, misses, and switches", () => {
    const turn = {
      turn: 3,
      sides: {
        A: { ...baseSide },
        B: { ...baseSide, active: "Soggy", action: { action: "switch", value: "Rocky" } as Action },
      },
      replacements: {},
    };
    const lines = describeTurn(turn);
    expect(lines).toContain("You: Sparky used Jolt for 23 damage.");
    expect(lines).toContain("Opponent: switched to Rocky.");
  });

  it("describes crits, status, poison, and replacements", () => {
    const turn = {
      turn: 4,
      sides: {
        A: { ...baseSide, crit: true, status_applied: "paralyze" },
        B: { ...baseSide, active: "Soggy", hit: false, poison_damage: 12, active_after: "Soggy" },
      },
      replacements: { B: { to: "Rocky" } },
    };
    const lines = describeTurn(turn);
    expect(lines.join("\n")).toContain("(critical hit!)");
    expect(lines.join("\n")).toContain("It inflicted paralyze!");
    expect(lines).toContain("Opponent: Soggy used Jolt but it missed.");
    expect(lines).toContain("Opponent: Soggy took 12 poison damage.");
    expect(lines).toContain("Opponent sent out Rocky.");
  });

  it("describes immobilization", () => {
    const turn = {
      turn: 5,
      sides: {
        A: { ...baseSide, immobilized: true, executed: false, hit: false, damage: 0 },
        B: { ...baseSide, active: "Soggy" },
      },
      replacements: {},
    };
    expect(describeTurn(turn)).toContain("You: Sparky is paralyzed and couldn't move!");
  });
});

describe("error surfaces", () => {
  it("startBattle failure returns to setup with a notice", async () => {
    const failing: FetchLike = async () => ({
      status: 422,
      json: async () => ({ code: "unknown-agent", message: "no such agent" }),
    });
    const flow = new SessionFlow(new ArenaApi("", failing));
    await flow.startBattle("nonsense", false, 1);
    expect(flow.state.screen).toBe("setup");
    expect(flow.state.notice).toContain("unknown-agent");
    expect(renderApp(flow.state)).toContain("unknown-agent");
  });

  it("network failure never throws", async () => {
    const dead: FetchLike = async () => {
      throw new Error("connection refused");
    };
    const flow = new SessionFlow(new ArenaApi("", dead));
    await flow.startBattle("heuristic", false, 1);
    expect(flow.state.notice).toContain("network");
  });
});
