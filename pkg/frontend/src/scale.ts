// Linear scales and the pan/zoom viewport arithmetic for the scatter.
// Everything here is pure; the canvas renderer just applies the numbers.

export interface Viewport {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export interface Bounds {
  x: [number, number];
  y: [number, number];
}

/** Smallest viewport span, as a fraction of the full bounds span. */
const MIN_SPAN_FRACTION = 1e-3;

export function fullViewport(bounds: Bounds): Viewport {
  return { x0: bounds.x[0], x1: bounds.x[1], y0: bounds.y[0], y1: bounds.y[1] };
}

/** Map a data value into [rangeLo, rangeHi]. No clamping. */
export function scaleLinear(
  value: number,
  domainLo: number,
  domainHi: number,
  rangeLo: number,
  rangeHi: number,
): number {
  const t = (value - domainLo) / (domainHi - domainLo);
  return rangeLo + t * (rangeHi - rangeLo);
}

export function invertLinear(
  pixel: number,
  domainLo: number,
  domainHi: number,
  rangeLo: number,
  rangeHi: number,
): number {
  const t = (pixel - rangeLo) / (rangeHi - rangeLo);
  return domainLo + t * (domainHi - domainLo);
}

function clampSpan(
  lo: number,
  hi: number,
  bound: [number, number],
  minSpan: number,
): [number, number] {
  let span = hi - lo;
  if (span < minSpan) {
    const mid = (lo + hi) / 2;
    lo = mid - minSpan / 2;
    hi = mid + minSpan / 2;
    span = minSpan;
  }
  const full = bound[1] - bound[0];
  if (span >= full) return [bound[0], bound[1]];
  if (lo < bound[0]) return [bound[0], bound[0] + span];
  if (hi > bound[1]) return [bound[1] - span, bound[1]];
  return [lo, hi];
}

/**
 * Zoom by `factor` (> 1 zooms in) keeping the data point (cx, cy) fixed.
 * The viewport never leaves `bounds` and never collapses below the minimum
 * span, so repeated wheel events stay well conditioned.
 */
export function zoomViewport(
  vp: Viewport,
  cx: number,
  cy: number,
  factor: number,
  bounds: Bounds,
): Viewport {
  const fx = 1 / factor;
  const [x0, x1] = clampSpan(
    cx - (cx - vp.x0) * fx,
    cx + (vp.x1 - cx) * fx,
    bounds.x,
    (bounds.x[1] - bounds.x[0]) * MIN_SPAN_FRACTION,
  );
  const [y0, y1] = clampSpan(
    cy - (cy - vp.y0) * fx,
    cy + (vp.y1 - cy) * fx,
    bounds.y,
    (bounds.y[1] - bounds.y[0]) * MIN_SPAN_FRACTION,
  );
  return { x0, x1, y0, y1 };
}

/** Shift the viewport by a data-space delta, clamped to bounds. */
export function panViewport(
  vp: Viewport,
  dx: number,
  dy: number,
  bounds: Bounds,
): Viewport {
  const spanX = vp.x1 - vp.x0;
  const spanY = vp.y1 - vp.y0;
  let x0 = vp.x0 + dx;
  let y0 = vp.y0 + dy;
  x0 = Math.min(Math.max(x0, bounds.x[0]), bounds.x[1] - spanX);
  y0 = Math.min(Math.max(y0, bounds.y[0]), bounds.y[1] - spanY);
  return { x0, x1: x0 + spanX, y0, y1: y0 + spanY };
}

export function viewportsEqual(a: Viewport, b: Viewport, eps = 1e-12): boolean {
  return (
    Math.abs(a.x0 - b.x0) <= eps &&
    Math.abs(a.x1 - b.x1) <= eps &&
    Math.abs(a.y0 - b.y0) <= eps &&
    Math.abs(a.y1 - b.y1) <= eps
  );
}

/**
 * Round tick positions covering [lo, hi]: steps of 1/2/5 times a power of
 * ten, aiming for roughly `count` ticks.
 */
export function ticks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo) || count <= 0) return [];
  const rawStep = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const mult of [1, 2, 5, 10]) {
    step = mult * mag;
    if (step >= rawStep) break;
  }
  const out: number[] = [];
  const first = Math.ceil(lo / step) * step;
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    // snap away float dust so labels print clean
    out.push(Math.abs(v) < step * 1e-9 ? 0 : Number(v.toPrecision(12)));
  }
  return out;
}

/**
 * Density cell opacity: log-scaled so a handful of dense cells do not wash
 * out the rest. Returns 0 for empty cells, up to 1 at the max count.
 */
export function densityAlpha(count: number, maxCount: number): number {
  if (count <= 0 || maxCount <= 0) return 0;
  return Math.log1p(count) / Math.log1p(maxCount);
}
