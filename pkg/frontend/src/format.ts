// Small display formatters shared by the panels.

/** 1234567 -> "1.2M", 5300 -> "5.3k", 999 -> "999" */
export function formatCount(n: number): string {
  const abs = Math.abs(n);
  if (abs >= 1e9) return trimmed(n / 1e9) + "B";
  if (abs >= 1e6) return trimmed(n / 1e6) + "M";
  if (abs >= 1e3) return trimmed(n / 1e3) + "k";
  return String(Math.round(n));
}

function trimmed(x: number): string {
  const s = x.toFixed(1);
  return s.endsWith(".0") ? s.slice(0, -2) : s;
}

/** Botness for display: always two decimals, e.g. "0.73". */
export function formatScore(x: number): string {
  return x.toFixed(2);
}

export function formatPercentile(x: number): string {
  return x >= 99.95 ? "100" : x.toFixed(1);
}

/** Seconds since cascade root -> compact "3m 20s" style offset. */
export function formatOffset(seconds: number): string {
  const s = Math.round(seconds);
  if (s < 60) return `${s}s`;
  if (s < 3600) {
    const rem = s % 60;
    return rem ? `${Math.floor(s / 60)}m ${rem}s` : `${Math.floor(s / 60)}m`;
  }
  if (s < 86400) {
    const rem = Math.floor((s % 3600) / 60);
    return rem ? `${Math.floor(s / 3600)}h ${rem}m` : `${Math.floor(s / 3600)}h`;
  }
  const days = Math.floor(s / 86400);
  const remH = Math.floor((s % 86400) / 3600);
  return remH ? `${days}d ${remH}h` : `${days}d`;
}

/** Tick label: drop float dust, keep at most 3 decimals. */
export function formatTick(v: number): string {
  if (Number.isInteger(v)) return String(v);
  return String(Number(v.toFixed(3)));
}

/** Minimal HTML escaping for text interpolated into innerHTML templates. */
export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}
