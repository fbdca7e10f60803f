// Session flow: setup -> battle -> result, driven entirely by service payloads.
// No DOM in here so the whole flow can be contract-tested against recorded
// service transcripts.

import type { ArenaApi } from "./api.js";
import type { Action, BattleView, LogResponse, Phase, SessionResult, TurnRecord } from "./types.js";

export type Screen = "setup" | "battle" | "result";

export interface FlowState {
  screen: Screen;
  busy: boolean;
  sessionId: string | null;
  view: BattleView | null;
  legal: Action[];
  phase: Phase | null;
  feed: string[];
  notice: string | null;
  result: SessionResult | null;
  log: LogResponse | null;
  ratingSubmitted: number | null;
  fatal: string | null;
}

export function initialState(): FlowState {
  return {
    screen: "setup",
    busy: false,
    sessionId: null,
    view: null,
    legal: [],
    phase: null,
    feed: [],
    notice: null,
    result: null,
    log: null,
    ratingSubmitted: null,
    fatal: null,
  };
}

function describeSide(label: string, turn: TurnRecord, side: "A" | "B"): string[] {
  const entry = turn.sides[side];
  const lines: string[] = [];
  if (entry.action.action === "switch") {
    lines.push(`${label} switched to ${entry.action.value}.`);
  } else if (entry.immobilized) {
    lines.push(`${label} ${entry.active} is paralyzed and couldn't move!`);
  } else if (!entry.executed) {
    lines.push(`${label} ${entry.active} fainted before it could act.`);
  } else if (!entry.hit) {
    lines.push(`${label} ${entry.active} used ${entry.action.value} but it missed.`);
  } else {
    let line = `${label} ${entry.active} used ${entry.action.value} for ${entry.damage} damage`;
    if (entry.crit) line += " (critical hit!)";
    line += ".";
    if (entry.status_applied) line += ` It inflicted ${entry.status_applied}!`;
    lines.push(line);
  }
  if (entry.poison_damage > 0) {
    lines.push(`${label} ${entry.active_after} took ${entry.poison_damage} poison damage.`);
  }
  return lines;
}

export function describeTurn(turn: TurnRecord): string[] {
  const lines = [`— Turn ${turn.turn} —`];
  lines.push(...describeSide("You:", turn, "A"));
  lines.push(...describeSide("Opponent:", turn, "B"));
  for (const [side, repl] of Object.entries(turn.replacements ?? {})) {
    const label = side === "A" ? "You sent out" : "Opponent sent out";
    lines.push(`${label} ${repl.to}.`);
  }
  return lines;
}

export class SessionFlow {
  state: FlowState = initialState();

  constructor(
    private readonly api: ArenaApi,
    private readonly onChange: (state: FlowState) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  replacementPending(): boolean {
    return this.state.phase === "awaiting_replacement";
  }

  reset(): void {
    this.state = initialState();
    this.emit();
  }

  async startBattle(opponent: string, thinking: boolean, seed?: number): Promise<void> {
    this.state = { ...initialState(), busy: true };
    this.emit();
    const result = await this.api.createSession(opponent, thinking, seed);
    if (!result.ok) {
      this.state = {
        ...initialState(),
        notice: `${result.code}: ${result.message}`,
      };
      this.emit();
      return;
    }
    this.state = {
      ...this.state,
      busy: false,
      screen: "battle",
      sessionId: result.data.session_id,
      view: result.data.view,
      legal: result.data.legal,
      phase: result.data.phase,
      feed: [],
      notice: null,
    };
    this.emit();
  }

  /** Re-render from the latest server view; the service is the single source of truth. */
  async refresh(): Promise<void> {
    if (!this.state.sessionId) return;
    const result = await this.api.getSession(this.state.sessionId);
    if (!result.ok) {
      this.state = { ...this.state, busy: false, fatal: `${result.code}: ${result.message}` };
      this.emit();
      return;
    }
    this.state = {
      ...this.state,
      busy: false,
      view: result.data.view,
      legal: result.data.legal,
      phase: result.data.phase,
      result: result.data.result,
    };
    this.emit();
  }

  async chooseAction(action: Action): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId || this.state.busy) return;
    this.state = { ...this.state, busy: true, notice: null };
    this.emit();
    const result = await this.api.postAction(sessionId, action);
    if (!result.ok) {
      // 409/422 become an inline notice and the view re-syncs from GET
      this.state = { ...this.state, notice: `${result.code}: ${result.message}` };
      await this.refresh();
      return;
    }
    const feed = [...this.state.feed];
    if (result.data.turn) {
      feed.push(...describeTurn(result.data.turn));
    } else if (action.action === "switch") {
      feed.push(`You sent out ${action.value}.`);
    }
    this.state = {
      ...this.state,
      busy: false,
      view: result.data.view,
      legal: result.data.legal,
      phase: result.data.phase,
      result: result.data.result,
      feed,
    };
    this.emit();
  }

  /** Move to the result screen and load the full log (bench revealed after finish). */
  async openResult(): Promise<void> {
    if (!this.state.sessionId) return;
    const result = await this.api.getLog(this.state.sessionId);
    if (!result.ok) {
      this.state = { ...this.state, fatal: `${result.code}: ${result.message}` };
      this.emit();
      return;
    }
    this.state = {
      ...this.state,
      screen: "result",
      log: result.data,
      result: result.data.result ?? this.state.result,
    };
    this.emit();
  }

  async submitRating(rating: number): Promise<void> {
    if (!this.state.sessionId || this.state.ratingSubmitted !== null) return;
    const result = await this.api.postFeedback(this.state.sessionId, rating);
    if (!result.ok) {
      this.state = { ...this.state, notice: `${result.code}: ${result.message}` };
      this.emit();
      return;
    }
    this.state = { ...this.state, ratingSubmitted: result.data.rating, notice: null };
    this.emit();
  }
}
