// Controller: owns the ViewState, talks to the API, and re-renders the
// panels after every transition. All state changes go through the pure
// functions in state.ts.

import { ApiError, createApi } from "./api.js";
import type { Api, ScatterPoint } from "./api.js";
import { cascadeSvg, carouselHtml, emptyCascadeHtml } from "./cascade_panel.js";
import { escapeHtml, formatScore } from "./format.js";
import { ScatterRenderer } from "./scatter.js";
import {
  ViewState,
  addPending,
  applyCascade,
  applyScatter,
  applyUser,
  canRetrain,
  currentCascadeId,
  clearError,
  initialState,
  retrainFailed,
  retrainStarted,
  retrainSucceeded,
  selectUser,
  setScatterSeed,
  stepCascade,
} from "./state.js";
import { emptyUserHtml, userPanelHtml } from "./user_panel.js";

const SCATTER_N = 1000;
const RETRAIN_ROUNDS = 10;

const api: Api = createApi();

let state: ViewState = initialState();
let refreshQueued = false;
let lastFailed: (() => Promise<void>) | null = null;

// dom handles, resolved once at startup
const el = {
  scatterCanvas: byId<HTMLCanvasElement>("scatter-canvas"),
  tooltip: byId<HTMLDivElement>("tooltip"),
  errorBanner: byId<HTMLDivElement>("error-banner"),
  errorText: byId<HTMLSpanElement>("error-text"),
  retryBtn: byId<HTMLButtonElement>("retry-btn"),
  staleBanner: byId<HTMLDivElement>("stale-banner"),
  versionPill: byId<HTMLSpanElement>("version-pill"),
  totalUsers: byId<HTMLSpanElement>("total-users"),
  retrainBtn: byId<HTMLButtonElement>("retrain-btn"),
  resampleBtn: byId<HTMLButtonElement>("resample-btn"),
  resetViewBtn: byId<HTMLButtonElement>("reset-view-btn"),
  userPanel: byId<HTMLDivElement>("user-panel"),
  carousel: byId<HTMLDivElement>("carousel"),
  cascadePanel: byId<HTMLDivElement>("cascade-panel"),
};

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const scatter = new ScatterRenderer(el.scatterCanvas, {
  onSelect(point: ScatterPoint) {
    void pickUser(point.user_id);
  },
  onHover(point, px, py) {
    if (!point) {
      el.tooltip.hidden = true;
      return;
    }
    el.tooltip.hidden = false;
    el.tooltip.style.left = `${px + 14}px`;
    el.tooltip.style.top = `${py + 8}px`;
    const tag = point.top_hashtag ? ` · #${escapeHtml(point.top_hashtag)}` : "";
    el.tooltip.innerHTML =
      `@${escapeHtml(point.screen_name || point.user_id)}` +
      `<span class="muted"> ${formatScore(point.botness)}${tag}</span>`;
  },
  onViewportChange(atHome) {
    el.resetViewBtn.disabled = atHome;
  },
});

function update(next: ViewState): void {
  const prev = state;
  state = next;
  if (state === prev) return;
  render(prev);
}

function render(prev: ViewState): void {
  if (state.scatter !== prev.scatter || state.selectedUserId !== prev.selectedUserId) {
    scatter.setData(state.scatter, state.selectedUserId);
  }
  el.versionPill.textContent = `scores v${state.scoresVersion || "–"}`;
  el.totalUsers.textContent = state.scatter
    ? `${state.scatter.total_users} users`
    : "";

  const pendingCount = Object.keys(state.pending).length;
  el.retrainBtn.disabled = !canRetrain(state);
  el.retrainBtn.textContent = state.retrainInFlight
    ? "retraining…"
    : pendingCount
      ? `retrain (${pendingCount})`
      : "retrain";

  el.errorBanner.hidden = state.error === null;
  if (state.error !== null) el.errorText.textContent = state.error;
  el.staleBanner.hidden = state.staleVersion === null;

  renderUserPanel(prev);
  renderCascadePanel(prev);

  // a future version was observed: refetch everything exactly once
  if (state.staleVersion !== null && !refreshQueued) {
    refreshQueued = true;
    void refreshAll().finally(() => {
      refreshQueued = false;
    });
  }
}

function renderUserPanel(prev: ViewState): void {
  if (state.user === prev.user && state.pending === prev.pending) return;
  if (!state.user) {
    el.userPanel.innerHTML = emptyUserHtml();
    return;
  }
  const user = state.user;
  el.userPanel.innerHTML = userPanelHtml(user, {
    pendingLabel: state.pending[user.user_id],
  });

  const slider = el.userPanel.querySelector<HTMLInputElement>(".label-slider")!;
  const valueOut = el.userPanel.querySelector<HTMLOutputElement>(".label-value")!;
  slider.addEventListener("input", () => {
    valueOut.textContent = formatScore(Number(slider.value));
  });
  for (const btn of el.userPanel.querySelectorAll<HTMLButtonElement>("[data-label]")) {
    btn.addEventListener("click", () => {
      slider.value = btn.dataset.label!;
      valueOut.textContent = formatScore(Number(slider.value));
    });
  }
  el.userPanel.querySelector<HTMLButtonElement>(".save-label")!
    .addEventListener("click", () => {
      void saveLabel(user.user_id, Number(slider.value));
    });
}

function renderCascadePanel(prev: ViewState): void {
  if (
    state.cascade === prev.cascade &&
    state.user === prev.user &&
    state.cascadeIndex === prev.cascadeIndex
  ) {
    return;
  }
  if (!state.user || state.user.cascade_ids.length === 0) {
    el.carousel.innerHTML = "";
    el.cascadePanel.innerHTML = emptyCascadeHtml();
    return;
  }

  el.carousel.innerHTML = carouselHtml(
    state.cascadeIndex,
    state.user.cascade_ids.length,
    currentCascadeId(state) ?? "",
  );
  el.carousel.querySelector<HTMLButtonElement>(".carousel-prev")!
    .addEventListener("click", () => void moveCarousel(-1));
  el.carousel.querySelector<HTMLButtonElement>(".carousel-next")!
    .addEventListener("click", () => void moveCarousel(1));

  if (!state.cascade) {
    el.cascadePanel.innerHTML = '<p class="hint">loading cascade…</p>';
    return;
  }
  const width = Math.max(el.cascadePanel.clientWidth || 560, 320);
  el.cascadePanel.innerHTML = cascadeSvg(state.cascade, { width, height: 230 });
  // cascade nodes select their author, same contract as scatter points
  for (const node of el.cascadePanel.querySelectorAll<SVGCircleElement>(".cascade-node")) {
    node.addEventListener("click", () => {
      const idx = Number(node.dataset.index);
      const ev = state.cascade?.events[idx];
      if (ev) void pickUser(ev.user_id);
    });
  }
}

// ── data flows ────────────────────────────────────────────────────────────

async function guard(label: string, run: () => Promise<void>): Promise<void> {
  try {
    await run();
    lastFailed = null;
  } catch (err) {
    lastFailed = run;
    const msg = err instanceof ApiError
      ? `${label}: ${err.message}`
      : `${label} failed (is the server up?)`;
    update({ ...state, error: msg });
  }
}

async function refreshScatter(): Promise<void> {
  await guard("loading scatter", async () => {
    const resp = await api.scatter(SCATTER_N, state.scatterSeed);
    update(applyScatter(clearError(state), resp));
  });
}

async function fetchUser(userId: string): Promise<void> {
  await guard("loading user", async () => {
    const detail = await api.user(userId);
    update(applyUser(state, detail));
    const cid = currentCascadeId(state);
    if (cid && !state.cascade) await fetchCascade(cid);
  });
}

async function fetchCascade(cascadeId: string): Promise<void> {
  await guard("loading cascade", async () => {
    const detail = await api.cascade(cascadeId);
    update(applyCascade(state, detail));
  });
}

async function pickUser(userId: string): Promise<void> {
  update(selectUser(state, userId));
  await fetchUser(userId);
}

async function moveCarousel(delta: number): Promise<void> {
  update(stepCascade(state, delta));
  const cid = currentCascadeId(state);
  if (cid) await fetchCascade(cid);
}

async function saveLabel(userId: string, label: number): Promise<void> {
  await guard("saving label", async () => {
    await api.annotate(userId, label);
    update(addPending(state, userId, label));
  });
}

async function runRetrain(): Promise<void> {
  update(retrainStarted(state));
  try {
    const version = await api.retrain(RETRAIN_ROUNDS, 0);
    update(retrainSucceeded(state, version));
  } catch (err) {
    const msg = err instanceof ApiError && err.status === 409
      ? "retrain in progress, try again shortly"
      : err instanceof ApiError
        ? `retrain rejected: ${err.message}`
        : "retrain failed (is the server up?)";
    update(retrainFailed(state, msg));
  }
}

async function refreshAll(): Promise<void> {
  await refreshScatter();
  if (state.selectedUserId && !state.user) {
    await fetchUser(state.selectedUserId);
  }
}

// ── static controls ───────────────────────────────────────────────────────

el.retrainBtn.addEventListener("click", () => void runRetrain());

el.resampleBtn.addEventListener("click", () => {
  update(setScatterSeed(state, state.scatterSeed + 1));
  void refreshScatter();
});

el.resetViewBtn.addEventListener("click", () => scatter.resetViewport());

el.retryBtn.addEventListener("click", () => {
  update(clearError(state));
  const retry = lastFailed;
  lastFailed = null;
  if (retry) void guard("retry", retry);
  else void refreshAll();
});

window.addEventListener("resize", () => {
  scatter.render();
  renderCascadePanel(initialState()); // force svg re-measure
});

void refreshAll();
