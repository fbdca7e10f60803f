// Entry point: wires the flow to the DOM. All clicks are delegated through
// data- attributes; the buttons themselves come from the service's legal list.

import { ArenaApi } from "./api.js";
import { SessionFlow } from "./flow.js";
import { renderApp } from "./render.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? window.location.origin;

const app = document.getElementById("app")!;
const api = new ArenaApi(baseUrl);
const flow = new SessionFlow(api, (state) => {
  app.innerHTML = renderApp(state);
  const feed = document.querySelector(".feed-body");
  if (feed) feed.scrollTop = feed.scrollHeight;
  const select = document.getElementById("opponent-select") as HTMLSelectElement | null;
  if (select) {
    select.addEventListener("change", () => {
      document.getElementById("model-field")?.classList.toggle("hidden", select.value !== "model");
    });
  }
});

app.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest("[data-action-index],[data-rating],[data-view-result],[data-new-battle]");
  if (!target) return;
  if (target.hasAttribute("data-action-index")) {
    const index = Number(target.getAttribute("data-action-index"));
    const action = flow.state.legal[index];
    if (action) void flow.chooseAction(action);
  } else if (target.hasAttribute("data-rating")) {
    void flow.submitRating(Number(target.getAttribute("data-rating")));
  } else if (target.hasAttribute("data-view-result")) {
    void flow.openResult();
  } else if (target.hasAttribute("data-new-battle")) {
    flow.reset();
  }
});

app.addEventListener("submit", (event) => {
  const form = event.target as HTMLFormElement;
  if (form.id !== "setup-form") return;
  event.preventDefault();
  const data = new FormData(form);
  const kind = String(data.get("opponent") ?? "heuristic");
  const model = String(data.get("model") ?? "").trim();
  const opponent = kind === "model" ? model : kind;
  if (!opponent) return;
  const thinking = data.get("thinking") !== null;
  const seedRaw = String(data.get("seed") ?? "").trim();
  const seed = seedRaw === "" ? undefined : Number(seedRaw);
  void flow.startBattle(opponent, thinking, seed);
});

flow.reset();
