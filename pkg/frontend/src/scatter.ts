// Canvas scatter: botness on x, influence percentile on y, a 50x50 density
// underlay for the whole population, and the fetched sample drawn on top
// colored by top hashtag. Pan with drag, zoom with the wheel, double-click
// to reset. Projection and hit-testing are exported for tests; the class
// owns the canvas.

import type { ScatterPoint, ScatterResponse } from "./api.js";
import { colorForHashtag } from "./color.js";
import { formatTick } from "./format.js";
import {
  Bounds,
  Viewport,
  densityAlpha,
  fullViewport,
  invertLinear,
  panViewport,
  scaleLinear,
  ticks,
  viewportsEqual,
  zoomViewport,
} from "./scale.js";

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export interface ScatterGeometry {
  width: number;
  height: number;
  margin: Margin;
  viewport: Viewport;
}

export const SCATTER_BOUNDS: Bounds = { x: [0, 1], y: [0, 100] };

const MARGIN: Margin = { top: 14, right: 16, bottom: 34, left: 44 };
const POINT_R = 4;
const HIT_R = 8;

export function projectX(geom: ScatterGeometry, x: number): number {
  return scaleLinear(
    x,
    geom.viewport.x0,
    geom.viewport.x1,
    geom.margin.left,
    geom.width - geom.margin.right,
  );
}

export function projectY(geom: ScatterGeometry, y: number): number {
  // pixel y grows downward
  return scaleLinear(
    y,
    geom.viewport.y0,
    geom.viewport.y1,
    geom.height - geom.margin.bottom,
    geom.margin.top,
  );
}

export function unprojectX(geom: ScatterGeometry, px: number): number {
  return invertLinear(
    px,
    geom.viewport.x0,
    geom.viewport.x1,
    geom.margin.left,
    geom.width - geom.margin.right,
  );
}

export function unprojectY(geom: ScatterGeometry, py: number): number {
  return invertLinear(
    py,
    geom.viewport.y0,
    geom.viewport.y1,
    geom.height - geom.margin.bottom,
    geom.margin.top,
  );
}

/** Index of the point nearest (px, py) within `radius` pixels, else null. */
export function hitTest(
  points: ScatterPoint[],
  geom: ScatterGeometry,
  px: number,
  py: number,
  radius = HIT_R,
): number | null {
  let best = -1;
  let bestD2 = radius * radius;
  for (let i = 0; i < points.length; i++) {
    const dx = projectX(geom, points[i].botness) - px;
    const dy = projectY(geom, points[i].influence_percentile) - py;
    const d2 = dx * dx + dy * dy;
    if (d2 <= bestD2) {
      bestD2 = d2;
      best = i;
    }
  }
  return best >= 0 ? best : null;
}

export interface ScatterCallbacks {
  onSelect(point: ScatterPoint): void;
  onHover(point: ScatterPoint | null, px: number, py: number): void;
  onViewportChange(atHome: boolean): void;
}

export class ScatterRenderer {
  private readonly canvas: HTMLCanvasElement;
  private readonly ctx: CanvasRenderingContext2D;
  private readonly callbacks: ScatterCallbacks;
  private data: ScatterResponse | null = null;
  private selectedUserId: string | null = null;
  private viewport: Viewport = fullViewport(SCATTER_BOUNDS);
  private dragging = false;
  private dragLast: [number, number] = [0, 0];
  private dragMoved = false;

  constructor(canvas: HTMLCanvasElement, callbacks: ScatterCallbacks) {
    this.canvas = canvas;
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
    this.callbacks = callbacks;
    this.bindEvents();
  }

  setData(data: ScatterResponse | null, selectedUserId: string | null): void {
    this.data = data;
    this.selectedUserId = selectedUserId;
    this.render();
  }

  setSelected(selectedUserId: string | null): void {
    this.selectedUserId = selectedUserId;
    this.render();
  }

  resetViewport(): void {
    this.viewport = fullViewport(SCATTER_BOUNDS);
    this.callbacks.onViewportChange(true);
    this.render();
  }

  atHomeViewport(): boolean {
    return viewportsEqual(this.viewport, fullViewport(SCATTER_BOUNDS));
  }

  private geometry(): ScatterGeometry {
    return {
      width: this.canvas.clientWidth,
      height: this.canvas.clientHeight,
      margin: MARGIN,
      viewport: this.viewport,
    };
  }

  private bindEvents(): void {
    const el = this.canvas;

    el.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const rect = el.getBoundingClientRect();
      const geom = this.geometry();
      const cx = unprojectX(geom, ev.clientX - rect.left);
      const cy = unprojectY(geom, ev.clientY - rect.top);
      const factor = ev.deltaY < 0 ? 1.2 : 1 / 1.2;
      this.viewport = zoomViewport(this.viewport, cx, cy, factor, SCATTER_BOUNDS);
      this.callbacks.onViewportChange(this.atHomeViewport());
      this.render();
    }, { passive: false });

    el.addEventListener("mousedown", (ev) => {
      this.dragging = true;
      this.dragMoved = false;
      this.dragLast = [ev.clientX, ev.clientY];
    });

    window.addEventListener("mousemove", (ev) => {
      if (this.dragging) {
        const geom = this.geometry();
        const [lx, ly] = this.dragLast;
        if (Math.abs(ev.clientX - lx) + Math.abs(ev.clientY - ly) > 2) {
          this.dragMoved = true;
        }
        const dx = unprojectX(geom, lx) - unprojectX(geom, ev.clientX);
        const dy = unprojectY(geom, ly) - unprojectY(geom, ev.clientY);
        this.dragLast = [ev.clientX, ev.clientY];
        this.viewport = panViewport(this.viewport, dx, dy, SCATTER_BOUNDS);
        this.callbacks.onViewportChange(this.atHomeViewport());
        this.render();
        return;
      }
      if (ev.target === el && this.data) {
        const rect = el.getBoundingClientRect();
        const px = ev.clientX - rect.left;
        const py = ev.clientY - rect.top;
        const hit = hitTest(this.data.points, this.geometry(), px, py);
        this.callbacks.onHover(
          hit === null ? null : this.data.points[hit], px, py,
        );
      }
    });

    window.addEventListener("mouseup", (ev) => {
      if (!this.dragging) return;
      this.dragging = false;
      if (this.dragMoved || ev.target !== el || !this.data) return;
      const rect = el.getBoundingClientRect();
      const hit = hitTest(
        this.data.points,
        this.geometry(),
        ev.clientX - rect.left,
        ev.clientY - rect.top,
      );
      if (hit !== null) this.callbacks.onSelect(this.data.points[hit]);
    });

    el.addEventListener("mouseleave", () => {
      this.callbacks.onHover(null, 0, 0);
    });

    el.addEventListener("dblclick", (ev) => {
      ev.preventDefault();
      this.resetViewport();
    });
  }

  render(): void {
    const dpr = window.devicePixelRatio || 1;
    const w = this.canvas.clientWidth;
    const h = this.canvas.clientHeight;
    if (this.canvas.width !== Math.round(w * dpr)) {
      this.canvas.width = Math.round(w * dpr);
    }
    if (this.canvas.height !== Math.round(h * dpr)) {
      this.canvas.height = Math.round(h * dpr);
    }
    const ctx = this.ctx;
    ctx.save();
    ctx.scale(dpr, dpr);
    ctx.clearRect(0, 0, w, h);

    const geom = this.geometry();
    const plotW = w - MARGIN.left - MARGIN.right;
    const plotH = h - MARGIN.top - MARGIN.bottom;
    if (plotW <= 0 || plotH <= 0) {
      ctx.restore();
      return;
    }

    // plot background
    ctx.fillStyle = "#10141c";
    ctx.fillRect(MARGIN.left, MARGIN.top, plotW, plotH);

    ctx.save();
    ctx.beginPath();
    ctx.rect(MARGIN.left, MARGIN.top, plotW, plotH);
    ctx.clip();
    if (this.data) {
      this.drawDensity(geom);
      this.drawPoints(geom);
    }
    ctx.restore();

    this.drawAxes(geom);
    ctx.restore();
  }

  private drawDensity(geom: ScatterGeometry): void {
    const grid = this.data!.density;
    const ctx = this.ctx;
    let maxCount = 0;
    for (const row of grid.counts) {
      for (const c of row) if (c > maxCount) maxCount = c;
    }
    if (maxCount === 0) return;
    const [gx0, gx1] = grid.x_range;
    const [gy0, gy1] = grid.y_range;
    const cw = (gx1 - gx0) / grid.x_bins;
    const ch = (gy1 - gy0) / grid.y_bins;
    for (let xi = 0; xi < grid.x_bins; xi++) {
      for (let yi = 0; yi < grid.y_bins; yi++) {
        const count = grid.counts[xi][yi];
        if (!count) continue;
        const alpha = densityAlpha(count, maxCount);
        const px0 = projectX(geom, gx0 + xi * cw);
        const px1 = projectX(geom, gx0 + (xi + 1) * cw);
        const py0 = projectY(geom, gy0 + yi * ch);
        const py1 = projectY(geom, gy0 + (yi + 1) * ch);
        if (px1 < geom.margin.left || px0 > geom.width - geom.margin.right) {
          continue;
        }
        ctx.fillStyle = `rgba(86, 120, 170, ${(0.45 * alpha).toFixed(3)})`;
        // py0 > py1 because pixel y is flipped
        ctx.fillRect(px0, py1, px1 - px0, py0 - py1);
      }
    }
  }

  private drawPoints(geom: ScatterGeometry): void {
    const ctx = this.ctx;
    for (const p of this.data!.points) {
      const px = projectX(geom, p.botness);
      const py = projectY(geom, p.influence_percentile);
      const selected = p.user_id === this.selectedUserId;
      ctx.beginPath();
      ctx.arc(px, py, selected ? POINT_R + 2 : POINT_R, 0, Math.PI * 2);
      ctx.fillStyle = colorForHashtag(p.top_hashtag);
      ctx.globalAlpha = selected ? 1 : 0.85;
      ctx.fill();
      ctx.globalAlpha = 1;
      if (selected) {
        ctx.lineWidth = 2;
        ctx.strokeStyle = "#ffffff";
        ctx.stroke();
      }
    }
  }

  private drawAxes(geom: ScatterGeometry): void {
    const ctx = this.ctx;
    const { width: w, height: h } = geom;
    ctx.strokeStyle = "#3a4354";
    ctx.fillStyle = "#9aa3b2";
    ctx.lineWidth = 1;
    ctx.font = "11px system-ui, sans-serif";

    ctx.strokeRect(MARGIN.left, MARGIN.top, w - MARGIN.left - MARGIN.right,
      h - MARGIN.top - MARGIN.bottom);

    ctx.textAlign = "center";
    ctx.textBaseline = "top";
    for (const t of ticks(geom.viewport.x0, geom.viewport.x1, 5)) {
      const px = projectX(geom, t);
      ctx.beginPath();
      ctx.moveTo(px, h - MARGIN.bottom);
      ctx.lineTo(px, h - MARGIN.bottom + 4);
      ctx.stroke();
      ctx.fillText(formatTick(t), px, h - MARGIN.bottom + 7);
    }
    ctx.fillText("botness", MARGIN.left + (w - MARGIN.left - MARGIN.right) / 2,
      h - MARGIN.bottom + 20);

    ctx.textAlign = "right";
    ctx.textBaseline = "middle";
    for (const t of ticks(geom.viewport.y0, geom.viewport.y1, 5)) {
      const py = projectY(geom, t);
      ctx.beginPath();
      ctx.moveTo(MARGIN.left - 4, py);
      ctx.lineTo(MARGIN.left, py);
      ctx.stroke();
      ctx.fillText(formatTick(t), MARGIN.left - 7, py);
    }

    ctx.save();
    ctx.translate(12, MARGIN.top + (h - MARGIN.top - MARGIN.bottom) / 2);
    ctx.rotate(-Math.PI / 2);
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText("influence percentile", 0, 0);
    ctx.restore();
  }
}
