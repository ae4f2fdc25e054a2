// Typed client for the explorer JSON API. Every function maps one endpoint;
// the fetch implementation is injectable so tests can fake the wire.

export interface ScatterPoint {
  user_id: string;
  screen_name: string;
  botness: number;
  influence_percentile: number;
  top_hashtag: string;
}

export interface DensityGrid {
  x_bins: number;
  y_bins: number;
  x_range: [number, number];
  y_range: [number, number];
  /** counts[xi][yi], xi over botness bins, yi over percentile bins */
  counts: number[][];
}

export interface ScatterResponse {
  points: ScatterPoint[];
  density: DensityGrid;
  total_users: number;
  scores_version: number;
}

export interface HashtagUse {
  tag: string;
  count: number;
}

export interface UserDetail {
  user_id: string;
  screen_name: string;
  location: string;
  profile_image_url: string;
  description: string;
  followers_count: number;
  statuses_count: number;
  tweets_in_dump: number;
  hashtags: HashtagUse[];
  botness: number;
  influence: number;
  influence_percentile: number;
  cascade_ids: string[];
  scores_version: number;
}

export interface CascadeEvent {
  index: number;
  tweet_id: string;
  user_id: string;
  rel_time: number;
  mark: number;
  expected_parent: number | null;
  botness: number | null;
}

export interface CascadeDetail {
  cascade_id: string;
  root_text: string;
  events: CascadeEvent[];
  scores_version: number;
}

export interface Health {
  status: string;
  users: number;
  cascades: number;
  model: boolean;
  scores_version: number;
}

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }
}

export interface Api {
  scatter(n: number, seed: number): Promise<ScatterResponse>;
  user(userId: string): Promise<UserDetail>;
  cascade(cascadeId: string): Promise<CascadeDetail>;
  annotate(userId: string, label: number): Promise<void>;
  retrain(rounds: number, seed: number): Promise<number>;
  health(): Promise<Health>;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function errorDetail(res: Response): Promise<string> {
  // FastAPI validation errors put an array under "detail"; flatten either way
  try {
    const body = await res.json();
    const detail = (body as { detail?: unknown }).detail;
    if (typeof detail === "string") return detail;
    if (detail !== undefined) return JSON.stringify(detail);
  } catch {
    // non-JSON body, fall through
  }
  return `HTTP ${res.status}`;
}

export function createApi(fetchFn?: FetchLike, base = ""): Api {
  const doFetch: FetchLike = fetchFn ?? ((url, init) => fetch(url, init));

  async function getJson<T>(path: string): Promise<T> {
    const res = await doFetch(base + path);
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return (await res.json()) as T;
  }

  async function postJson<T>(path: string, body: unknown): Promise<T | null> {
    const res = await doFetch(base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    if (res.status === 204) return null;
    return (await res.json()) as T;
  }

  return {
    scatter: (n, seed) =>
      getJson<ScatterResponse>(`/api/scatter?n=${n}&seed=${seed}`),

    user: (userId) =>
      getJson<UserDetail>(`/api/users/${encodeURIComponent(userId)}`),

    cascade: (cascadeId) =>
      getJson<CascadeDetail>(`/api/cascades/${encodeURIComponent(cascadeId)}`),

    annotate: async (userId, label) => {
      await postJson(`/api/annotations`, { user_id: userId, label });
    },

    retrain: async (rounds, seed) => {
      const doc = await postJson<{ new_scores_version: number }>(
        `/api/retrain`,
        { rounds, seed },
      );
      if (!doc) throw new ApiError(502, "empty retrain response");
      return doc.new_scores_version;
    },

    health: () => getJson<Health>(`/health`),
  };
}
