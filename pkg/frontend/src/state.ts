// View state and its transitions. Pure functions only: the controller in
// main.ts calls these and re-renders, so every behavior here is testable
// without a DOM.
//
// Version discipline: all visible data must come from one scores_version
// (the committed one). A response carrying an OLDER version is a stray
// in-flight reply and is dropped. A NEWER version can only be adopted via
// the scatter payload, which wipes the dependent panels so they refetch at
// the new version; user/cascade replies from the future just raise the
// stale flag and leave the committed data alone.

import type { CascadeDetail, ScatterResponse, UserDetail } from "./api.js";

export interface ViewState {
  scatter: ScatterResponse | null;
  scatterSeed: number;
  selectedUserId: string | null;
  user: UserDetail | null;
  /** carousel position within user.cascade_ids */
  cascadeIndex: number;
  cascade: CascadeDetail | null;
  /** labels queued since the last successful retrain, user_id -> label */
  pending: Record<string, number>;
  /** scores_version everything displayed was computed from; 0 = nothing yet */
  scoresVersion: number;
  /** a newer version exists server-side; banner until the refetch lands */
  staleVersion: number | null;
  retrainInFlight: boolean;
  error: string | null;
}

export function initialState(seed = 0): ViewState {
  return {
    scatter: null,
    scatterSeed: seed,
    selectedUserId: null,
    user: null,
    cascadeIndex: 0,
    cascade: null,
    pending: {},
    scoresVersion: 0,
    staleVersion: null,
    retrainInFlight: false,
    error: null,
  };
}

/** The cascade id the carousel currently points at, if any. */
export function currentCascadeId(state: ViewState): string | null {
  if (!state.user || state.user.cascade_ids.length === 0) return null;
  return state.user.cascade_ids[state.cascadeIndex] ?? null;
}

export function canRetrain(state: ViewState): boolean {
  return Object.keys(state.pending).length > 0 && !state.retrainInFlight;
}

export function applyScatter(
  state: ViewState,
  resp: ScatterResponse,
): ViewState {
  if (state.scoresVersion !== 0 && resp.scores_version < state.scoresVersion) {
    return state; // stray late reply
  }
  if (state.scoresVersion !== 0 && resp.scores_version > state.scoresVersion) {
    // adopt the new version; dependent panels are now unknown at this
    // version, so drop them and let the controller refetch
    return {
      ...state,
      scatter: resp,
      user: null,
      cascade: null,
      scoresVersion: resp.scores_version,
      staleVersion: null,
      error: null,
    };
  }
  return {
    ...state,
    scatter: resp,
    scoresVersion: resp.scores_version,
    staleVersion:
      state.staleVersion !== null && resp.scores_version >= state.staleVersion
        ? null
        : state.staleVersion,
    error: null,
  };
}

export function selectUser(state: ViewState, userId: string): ViewState {
  if (userId === state.selectedUserId) return state;
  return {
    ...state,
    selectedUserId: userId,
    user: null,
    cascade: null,
    cascadeIndex: 0,
  };
}

export function applyUser(state: ViewState, detail: UserDetail): ViewState {
  if (detail.user_id !== state.selectedUserId) return state; // stale selection
  if (detail.scores_version < state.scoresVersion) return state;
  if (detail.scores_version > state.scoresVersion) {
    // cannot mix with the committed scatter; flag and wait for refresh
    return { ...state, staleVersion: detail.scores_version };
  }
  const cascadeIndex = Math.min(
    state.cascadeIndex,
    Math.max(detail.cascade_ids.length - 1, 0),
  );
  return { ...state, user: detail, cascadeIndex };
}

/** Carousel step with wraparound; no-op when the user has no cascades. */
export function stepCascade(state: ViewState, delta: number): ViewState {
  if (!state.user) return state;
  const n = state.user.cascade_ids.length;
  if (n === 0) return state;
  const next = ((state.cascadeIndex + delta) % n + n) % n;
  if (next === state.cascadeIndex) return state;
  return { ...state, cascadeIndex: next, cascade: null };
}

export function applyCascade(
  state: ViewState,
  detail: CascadeDetail,
): ViewState {
  // a cascade only renders while it belongs to the selected user's carousel
  if (detail.cascade_id !== currentCascadeId(state)) return state;
  if (detail.scores_version < state.scoresVersion) return state;
  if (detail.scores_version > state.scoresVersion) {
    return { ...state, staleVersion: detail.scores_version };
  }
  return { ...state, cascade: detail };
}

export function addPending(
  state: ViewState,
  userId: string,
  label: number,
): ViewState {
  return { ...state, pending: { ...state.pending, [userId]: label } };
}

export function retrainStarted(state: ViewState): ViewState {
  return { ...state, retrainInFlight: true, error: null };
}

export function retrainSucceeded(
  state: ViewState,
  newVersion: number,
): ViewState {
  return {
    ...state,
    pending: {},
    retrainInFlight: false,
    staleVersion: newVersion,
  };
}

export function retrainFailed(state: ViewState, message: string): ViewState {
  return { ...state, retrainInFlight: false, error: message };
}

export function setError(state: ViewState, message: string): ViewState {
  return { ...state, error: message };
}

export function clearError(state: ViewState): ViewState {
  if (state.error === null) return state;
  return { ...state, error: null };
}

export function setScatterSeed(state: ViewState, seed: number): ViewState {
  return { ...state, scatterSeed: seed };
}
