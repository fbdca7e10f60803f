// HTML renderers: pure functions from flow state to markup strings. Action
// buttons are generated only from the service's legal list, so an illegal
// click is impossible by construction.

import type { FlowState } from "./flow.js";
import type { Action, BattleView, LogResponse, SessionResult, TeamMember } from "./types.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function hpBar(hp: number, maxHp: number): string {
  const pct = maxHp > 0 ? Math.round((100 * hp) / maxHp) : 0;
  const level = pct > 50 ? "high" : pct > 25 ? "mid" : "low";
  return `
    <div class="hp-bar" role="meter" aria-valuenow="${hp}" aria-valuemax="${maxHp}">
      <div class="hp-bar-fill hp-bar-fill--${level}" style="width:${pct}%"></div>
      <span class="hp-bar-text">${hp}/${maxHp}</span>
    </div>`;
}

function statusBadge(status: string | null): string {
  if (!status) return "";
  return `<span class="status-badge status-badge--${esc(status)}">${esc(status)}</span>`;
}

function teamPanel(team: TeamMember[]): string {
  const rows = team
    .map((member) => {
      const classes = ["team-member"];
      if (member.active) classes.push("team-member--active");
      if (member.hp === 0) classes.push("team-member--fainted");
      return `
        <div class="${classes.join(" ")}">
          <div class="team-member-name">${esc(member.name)}
            <span class="type-tag">${esc(member.type)}</span>
            ${statusBadge(member.status)}
            ${member.active ? '<span class="active-tag">active</span>' : ""}
          </div>
          ${hpBar(member.hp, member.max_hp)}
        </div>`;
    })
    .join("");
  return `<div class="team-panel"><h3>Your team</h3>${rows}</div>`;
}

function opponentPanel(view: BattleView): string {
  const opp = view.opponent;
  return `
    <div class="opponent-panel">
      <h3>Opponent</h3>
      <div class="battler-name">${esc(opp.name)}
        <span class="type-tag">${esc(opp.type)}</span>
        ${statusBadge(opp.status)}
      </div>
      ${hpBar(opp.hp, opp.max_hp)}
      <p class="panel-hint">Bench and moves stay hidden until the battle ends.</p>
    </div>`;
}

function actionButton(action: Action, index: number, view: BattleView): string {
  if (action.action === "move") {
    const info = view.own.moves.find((m) => m.name === action.value);
    const detail = info
      ? `<span class="move-detail">${esc(info.type)} · power ${info.power} · ${info.accuracy}% · PP ${info.pp_remaining}/${info.pp_max}</span>`
      : "";
    return `
      <button class="action-btn action-btn--move" data-action-index="${index}">
        <span class="move-name">${esc(action.value)}</span>${detail}
      </button>`;
  }
  return `
    <button class="action-btn action-btn--switch" data-action-index="${index}">
      Switch to ${esc(action.value)}
    </button>`;
}

function actionPanel(state: FlowState): string {
  const view = state.view!;
  const moves = state.legal.filter((a) => a.action === "move");
  const switches = state.legal.filter((a) => a.action === "switch");
  const buttons = (actions: Action[]) =>
    actions.map((a) => actionButton(a, state.legal.indexOf(a), view)).join("");
  return `
    <div class="action-panel">
      ${moves.length ? `<h3>Moves</h3><div class="action-group">${buttons(moves)}</div>` : ""}
      ${switches.length ? `<h3>Switch</h3><div class="action-group">${buttons(switches)}</div>` : ""}
    </div>`;
}

function replacementDialog(state: FlowState): string {
  const options = state.legal
    .map((action, index) => `
      <button class="action-btn action-btn--switch" data-action-index="${index}">
        ${esc(action.value)}
      </button>`)
    .join("");
  return `
    <div class="modal-backdrop">
      <div class="replacement-dialog" data-testid="replacement-dialog">
        <h3>${esc(state.view?.own.name ?? "Your battler")} fainted!</h3>
        <p>Choose a replacement:</p>
        <div class="action-group">${options}</div>
      </div>
    </div>`;
}

function feedPanel(feed: string[]): string {
  const lines = feed.slice(-30).map((line) => `<div class="feed-line">${esc(line)}</div>`).join("");
  return `<div class="feed-panel" id="turn-feed"><h3>Battle feed</h3><div class="feed-body">${lines}</div></div>`;
}

function noticeBanner(notice: string | null): string {
  if (!notice) return "";
  return `<div class="notice-banner" role="alert">${esc(notice)}</div>`;
}

export function renderSetup(state: FlowState): string {
  return `
    <div class="screen screen--setup">
      <h1>Battle Arena</h1>
      ${noticeBanner(state.notice)}
      <form id="setup-form" class="setup-form">
        <label>Opponent
          <select name="opponent" id="opponent-select">
            <option value="heuristic" selected>heuristic</option>
            <option value="random">random</option>
            <option value="model">model…</option>
          </select>
        </label>
        <label class="model-field hidden" id="model-field">Model name
          <input type="text" name="model" id="model-input" placeholder="e.g. gemini-2.5-flash" />
        </label>
        <label class="checkbox"><input type="checkbox" name="thinking" id="thinking-toggle" /> thinking mode</label>
        <label>Seed (optional)
          <input type="number" name="seed" id="seed-input" placeholder="random" />
        </label>
        <button type="submit" class="primary-btn" ${state.busy ? "disabled" : ""}>Start battle</button>
      </form>
    </div>`;
}

export function renderBattle(state: FlowState): string {
  const view = state.view!;
  const replacement = state.phase === "awaiting_replacement";
  return `
    <div class="screen screen--battle">
      <header class="battle-header">
        <span>Turn ${view.turn_number}</span>
        <span class="vs">${esc(view.own.name)} vs ${esc(view.opponent.name)}</span>
      </header>
      ${noticeBanner(state.notice)}
      <div class="battle-grid">
        ${opponentPanel(view)}
        ${teamPanel(view.team)}
        ${replacement ? "" : actionPanel(state)}
        ${feedPanel(state.feed)}
      </div>
      ${replacement ? replacementDialog(state) : ""}
      ${state.phase === "finished" ? `
        <div class="modal-backdrop">
          <div class="finish-dialog">
            <h3>Battle over</h3>
            <button class="primary-btn" data-view-result>See result</button>
          </div>
        </div>` : ""}
    </div>`;
}

function revealTeams(log: LogResponse): string {
  if (!log.teams) return "";
  const list = (side: "A" | "B", label: string) => `
    <div class="reveal-team">
      <h4>${label}</h4>
      <ul>${log.teams![side]
        .map((m) => `<li>${esc(m.name)} (${esc(m.type)}) — ${m.moves.map((mv) => esc(mv.name)).join(", ")}</li>`)
        .join("")}</ul>
    </div>`;
  return `<div class="reveal">${list("A", "Your team")}${list("B", "Opponent team (revealed)")}</div>`;
}

function resultBanner(result: SessionResult | null): string {
  if (!result) return `<h2>Battle over</h2>`;
  if (result.draw) return `<h2 class="result-draw">Draw after ${result.turns} turns</h2>`;
  const won = result.winner === "human";
  return `<h2 class="${won ? "result-win" : "result-loss"}">
    ${won ? "You won" : "You lost"} in ${result.turns} turns</h2>`;
}

export function renderResult(state: FlowState): string {
  const ratingButtons = [1, 2, 3, 4, 5]
    .map(
      (n) => `
      <button class="rating-btn ${state.ratingSubmitted === n ? "rating-btn--chosen" : ""}"
              data-rating="${n}" ${state.ratingSubmitted !== null ? "disabled" : ""}>${n}</button>`,
    )
    .join("");
  const fullLog = (state.log?.turns ?? [])
    .map((t) => `<div class="feed-line">Turn ${t.turn}: ` +
      `A ${esc(t.sides.A.action.action)} ${esc(t.sides.A.action.value)} (${t.sides.A.damage} dmg), ` +
      `B ${esc(t.sides.B.action.action)} ${esc(t.sides.B.action.value)} (${t.sides.B.damage} dmg)</div>`)
    .join("");
  return `
    <div class="screen screen--result">
      ${resultBanner(state.result)}
      ${noticeBanner(state.notice)}
      <div class="rating-box">
        <p>How difficult was this opponent? (1 = easy, 5 = brutal)</p>
        <div class="rating-row">${ratingButtons}</div>
        ${state.ratingSubmitted !== null ? `<p class="rating-thanks">Thanks! Recorded ${state.ratingSubmitted}/5.</p>` : ""}
      </div>
      ${revealTeams(state.log ?? { turns: [], finished: true })}
      <details class="full-log" open>
        <summary>Full battle log (${state.log?.turns.length ?? 0} turns)</summary>
        ${fullLog}
      </details>
      <button class="primary-btn" data-new-battle>New battle</button>
    </div>`;
}

export function renderApp(state: FlowState): string {
  if (state.fatal) {
    return `<div class="screen screen--error"><h2>Connection lost</h2><p>${esc(state.fatal)}</p>
      <button class="primary-btn" data-new-battle>Back to setup</button></div>`;
  }
  switch (state.screen) {
    case "setup":
      return renderSetup(state);
    case "battle":
      return renderBattle(state);
    case "result":
      return renderResult(state);
  }
}
