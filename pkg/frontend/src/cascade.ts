// Cascade view geometry: retweet timing along the horizontal axis, tree
// depth on the vertical, parent edges drawn as arcs. Pure layout math;
// main.ts turns the result into SVG.

import type { CascadeEvent } from "./api.js";

export interface CascadeNode {
  index: number;
  x: number;
  y: number;
  r: number;
  depth: number;
}

export interface CascadeEdge {
  child: number;
  parent: number;
}

export interface CascadeLayout {
  nodes: CascadeNode[];
  edges: CascadeEdge[];
  maxDepth: number;
  tMax: number;
}

export interface LayoutSize {
  width: number;
  height: number;
  pad?: number;
}

const R_MIN = 3.5;
const R_MAX = 11;

/**
 * Square-root time axis: retweet bursts concentrate in the first minutes
 * with a long tail, and sqrt keeps the early structure readable while the
 * axis still spans the full cascade.
 */
export function timeToX(
  t: number,
  tMax: number,
  width: number,
  pad: number,
): number {
  if (tMax <= 0) return pad;
  const frac = Math.sqrt(Math.max(t, 0) / tMax);
  return pad + frac * (width - 2 * pad);
}

/** Depth of every event under its expected parent; root is 0. */
export function eventDepths(events: CascadeEvent[]): number[] {
  const depths: number[] = new Array(events.length).fill(0);
  for (let i = 0; i < events.length; i++) {
    const p = events[i].expected_parent;
    // parents always precede children, so depths[p] is already final
    depths[i] = p === null || p < 0 || p >= i ? (i === 0 ? 0 : 1) : depths[p] + 1;
  }
  return depths;
}

export function layoutCascade(
  events: CascadeEvent[],
  size: LayoutSize,
): CascadeLayout {
  const pad = size.pad ?? 18;
  const depths = eventDepths(events);
  const maxDepth = depths.length ? Math.max(...depths) : 0;
  const tMax = events.length
    ? Math.max(...events.map((e) => e.rel_time))
    : 0;
  const maxMark = events.length
    ? Math.max(1, ...events.map((e) => e.mark))
    : 1;
  const rowH = (size.height - 2 * pad) / Math.max(maxDepth, 1);

  const nodes: CascadeNode[] = events.map((e, i) => ({
    index: i,
    x: timeToX(e.rel_time, tMax, size.width, pad),
    y: pad + depths[i] * rowH,
    r: R_MIN + (R_MAX - R_MIN) * Math.sqrt(e.mark / maxMark),
    depth: depths[i],
  }));

  const edges: CascadeEdge[] = [];
  for (let i = 0; i < events.length; i++) {
    const p = events[i].expected_parent;
    if (p !== null && p >= 0 && p < i) edges.push({ child: i, parent: p });
  }

  return { nodes, edges, maxDepth, tMax };
}

/** Quadratic arc from the parent node down/across to the child. */
export function arcPath(
  parent: CascadeNode,
  child: CascadeNode,
): string {
  const mx = (parent.x + child.x) / 2;
  // bow upward relative to the straight segment so sibling edges separate
  const bow = Math.min(Math.abs(child.x - parent.x) * 0.25, 30);
  const my = (parent.y + child.y) / 2 - bow;
  return `M ${round2(parent.x)} ${round2(parent.y)} Q ${round2(mx)} ${round2(my)} ${round2(child.x)} ${round2(child.y)}`;
}

function round2(x: number): number {
  return Math.round(x * 100) / 100;
}

/**
 * Tick times for the sqrt axis: even divisions in screen space mapped back
 * to seconds, so labels stay readable where the data actually sits.
 */
export function axisTickTimes(tMax: number, count = 4): number[] {
  if (tMax <= 0) return [0];
  const out: number[] = [];
  for (let i = 0; i <= count; i++) {
    const frac = i / count;
    out.push(frac * frac * tMax); // inverse of the sqrt mapping
  }
  return out;
}
