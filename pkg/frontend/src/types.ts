// Wire types for the arena service API. The client renders these verbatim and
// holds no game rules of its own: legality, damage, and phase all come from
// the service.

export type ActionKind = "move" | "switch";

export interface Action {
  action: ActionKind;
  value: string;
}

export interface MoveInfo {
  name: string;
  type: string;
  power: number;
  accuracy: number;
  pp_remaining: number;
  pp_max: number;
}

export interface OwnActive {
  name: string;
  type: string;
  hp: number;
  max_hp: number;
  status: string | null;
  moves: MoveInfo[];
}

export interface OpponentActive {
  name: string;
  type: string;
  hp: number;
  max_hp: number;
  status: string | null;
}

export interface TeamMember {
  name: string;
  type: string;
  hp: number;
  max_hp: number;
  status: string | null;
  active: boolean;
}

export interface BattleView {
  turn_number: number;
  own: OwnActive;
  opponent: OpponentActive;
  team: TeamMember[];
}

export type Phase = "awaiting_human" | "awaiting_replacement" | "resolving" | "finished";

export interface SideTurn {
  active: string;
  action: Action;
  available_moves?: string[];
  executed: boolean;
  accuracy_roll: number | null;
  hit: boolean;
  crit: boolean;
  damage: number;
  immobilized: boolean;
  pp_spent: boolean;
  status_applied: string | null;
  poison_damage: number;
  active_after: string;
  hp_after: number;
  telemetry: Record<string, unknown> | null;
}

export interface TurnRecord {
  turn: number;
  sides: { A: SideTurn; B: SideTurn };
  replacements: Record<string, { to: string }>;
}

export interface SessionResult {
  winner: "human" | "opponent" | null;
  draw: boolean;
  turns: number;
}

export interface CreateSessionResponse {
  session_id: string;
  view: BattleView;
  legal: Action[];
  phase: Phase;
}

export interface SessionStateResponse {
  view: BattleView;
  legal: Action[];
  phase: Phase;
  result: SessionResult | null;
}

export interface ActionResponse {
  view: BattleView;
  turn: TurnRecord | null;
  legal: Action[];
  phase: Phase;
  result: SessionResult | null;
}

export interface TeamMemberSpec {
  name: string;
  type: string;
  stats: Record<string, number>;
  moves: { name: string; type: string; power: number; accuracy: number }[];
}

export interface LogResponse {
  turns: TurnRecord[];
  finished: boolean;
  teams?: { A: TeamMemberSpec[]; B: TeamMemberSpec[] };
  result?: SessionResult;
}

export interface FeedbackResponse {
  stored: boolean;
  rating: number;
}
