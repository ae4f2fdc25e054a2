// Cascade panel markup: carousel header plus the timeline/tree SVG.
// String-building only; event wiring stays in main.ts.

import type { CascadeDetail } from "./api.js";
import {
  CascadeLayout,
  arcPath,
  axisTickTimes,
  layoutCascade,
  timeToX,
} from "./cascade.js";
import { escapeHtml, formatOffset, formatScore } from "./format.js";

export interface CascadePanelSize {
  width: number;
  height: number;
}

export function emptyCascadeHtml(): string {
  return '<p class="hint">Cascades show up here once a user is selected.</p>';
}

export function carouselHtml(
  index: number,
  total: number,
  cascadeId: string,
): string {
  const pos = total ? `${index + 1} / ${total}` : "0 / 0";
  return `
    <button class="btn carousel-prev" ${total > 1 ? "" : "disabled"}>&larr;</button>
    <span class="carousel-pos">cascade ${pos}</span>
    <span class="muted carousel-id">${escapeHtml(cascadeId)}</span>
    <button class="btn carousel-next" ${total > 1 ? "" : "disabled"}>&rarr;</button>
  `;
}

/** Grey half-red half ramp: low botness cool, high botness warm. */
function nodeColor(botness: number | null): string {
  if (botness === null) return "#5c6470";
  const warm = Math.round(90 + 150 * botness);
  const cool = Math.round(200 - 120 * botness);
  return `rgb(${warm}, ${cool}, 110)`;
}

export function cascadeSvg(
  detail: CascadeDetail,
  size: CascadePanelSize,
  selectedIndex: number | null = null,
): string {
  const layout: CascadeLayout = layoutCascade(detail.events, size);
  const parts: string[] = [];
  parts.push(
    `<svg class="cascade-svg" viewBox="0 0 ${size.width} ${size.height}" ` +
    `width="100%" height="${size.height}" role="img">`,
  );

  // time axis along the bottom
  const axisY = size.height - 4;
  for (const t of axisTickTimes(layout.tMax)) {
    const x = timeToX(t, layout.tMax, size.width, 18);
    parts.push(
      `<text class="axis-label" x="${x.toFixed(1)}" y="${axisY}" ` +
      `text-anchor="middle">${formatOffset(t)}</text>`,
    );
  }

  for (const e of layout.edges) {
    const d = arcPath(layout.nodes[e.parent], layout.nodes[e.child]);
    parts.push(`<path class="cascade-edge" d="${d}"/>`);
  }

  for (const node of layout.nodes) {
    const ev = detail.events[node.index];
    const cls = node.index === selectedIndex
      ? "cascade-node selected"
      : "cascade-node";
    const title = `@${ev.user_id} +${formatOffset(ev.rel_time)}` +
      (ev.botness === null ? "" : ` botness ${formatScore(ev.botness)}`);
    parts.push(
      `<circle class="${cls}" data-index="${node.index}" ` +
      `cx="${node.x.toFixed(1)}" cy="${node.y.toFixed(1)}" r="${node.r.toFixed(1)}" ` +
      `fill="${nodeColor(ev.botness)}">` +
      `<title>${escapeHtml(title)}</title></circle>`,
    );
  }

  parts.push("</svg>");
  const root = detail.events[0];
  const rootLine = root
    ? `<p class="cascade-root">"${escapeHtml(detail.root_text || "(no text)")}"` +
      ` <span class="muted">root @${escapeHtml(root.user_id)}, ` +
      `${detail.events.length} tweets</span></p>`
    : "";
  return rootLine + parts.join("");
}
