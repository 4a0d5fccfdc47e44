// Plane view: keep-out disk, trajectory trail, current position marker,
// commanded-input arrow, and an active-row highlight.  planeScene() computes
// pure screen-space geometry from UiState; drawPlane() paints it on any
// Canvas-2D-shaped context, so tests can check the geometry and the draw
// calls without a browser.

import type { Vec2 } from "./protocol.js";
import type { UiState } from "./state.js";

export interface PlaneGeometry {
  widthPx: number;
  heightPx: number;
  /** world coordinates [-worldHalf, worldHalf]^2 fill the shorter canvas side */
  worldHalf: number;
}

export function worldToScreen(g: PlaneGeometry, p: Vec2): Vec2 {
  const scale = Math.min(g.widthPx, g.heightPx) / (2 * g.worldHalf);
  return [g.widthPx / 2 + p[0] * scale, g.heightPx / 2 - p[1] * scale];
}

export function pixelsPerUnit(g: PlaneGeometry): number {
  return Math.min(g.widthPx, g.heightPx) / (2 * g.worldHalf);
}

export interface PlaneScene {
  diskCenter: Vec2;
  diskRadiusPx: number;
  trail: Vec2[];
  marker: Vec2 | null;
  markerInsideDisk: boolean;
  /** arrow from the marker along the commanded u_h, empty-length when idle */
  arrowFrom: Vec2 | null;
  arrowTo: Vec2 | null;
  safetyActive: boolean;
  passivityActive: boolean;
  infeasible: boolean;
  dimmed: boolean;
}

const ARROW_SCALE = 0.45; // world units of arrow length per unit of u_h

export function planeScene(g: PlaneGeometry, state: UiState): PlaneScene {
  const frame = state.frame;
  const d = diskRadius(state);
  const scene: PlaneScene = {
    diskCenter: worldToScreen(g, [0, 0]),
    diskRadiusPx: d * pixelsPerUnit(g),
    trail: state.trail.map((p) => worldToScreen(g, p)),
    marker: null,
    markerInsideDisk: false,
    arrowFrom: null,
    arrowTo: null,
    safetyActive: false,
    passivityActive: false,
    infeasible: false,
    dimmed: state.connection !== "connected",
  };
  if (frame === null) return scene;
  scene.marker = worldToScreen(g, frame.x1);
  scene.markerInsideDisk = Math.hypot(frame.x1[0], frame.x1[1]) < d;
  scene.safetyActive = frame.active.includes("safety");
  scene.passivityActive = frame.active.includes("passivity");
  scene.infeasible = frame.qp_status === "infeasible";
  const [ux, uy] = state.input;
  if (ux !== 0 || uy !== 0) {
    scene.arrowFrom = scene.marker;
    scene.arrowTo = worldToScreen(g, [
      frame.x1[0] + ux * ARROW_SCALE,
      frame.x1[1] + uy * ARROW_SCALE,
    ]);
  }
  return scene;
}

function diskRadius(state: UiState): number {
  const raw = state.hello?.scenario["d"];
  return typeof raw === "number" && Number.isFinite(raw) && raw > 0 ? raw : 1.0;
}

// The structural subset of CanvasRenderingContext2D the draw functions use;
// tests substitute a recording fake.
export interface Canvas2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
}

export const COLORS = {
  background: "#10141a",
  disk: "rgba(214, 69, 69, 0.28)",
  diskEdge: "#d64545",
  diskEdgeActive: "#ff7b5c",
  trail: "#5fa8d3",
  marker: "#e8f1f2",
  markerInfeasible: "#ffd166",
  arrow: "#9ef01a",
  passivityRing: "#b388eb",
};

export function drawPlane(ctx: Canvas2D, g: PlaneGeometry, state: UiState, nowMs = 0): void {
  const scene = planeScene(g, state);
  ctx.globalAlpha = 1;
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, g.widthPx, g.heightPx);
  if (scene.dimmed) ctx.globalAlpha = 0.35;

  // keep-out disk; boundary pulses while the safety row is active
  ctx.beginPath();
  ctx.arc(scene.diskCenter[0], scene.diskCenter[1], scene.diskRadiusPx, 0, 2 * Math.PI);
  ctx.fillStyle = COLORS.disk;
  ctx.fill();
  ctx.lineWidth = scene.safetyActive ? 3 + 1.5 * Math.sin(nowMs / 90) : 1.5;
  ctx.strokeStyle = scene.safetyActive ? COLORS.diskEdgeActive : COLORS.diskEdge;
  ctx.stroke();

  if (scene.trail.length >= 2) {
    ctx.beginPath();
    ctx.moveTo(scene.trail[0]![0], scene.trail[0]![1]);
    for (const p of scene.trail.slice(1)) ctx.lineTo(p[0], p[1]);
    ctx.lineWidth = 1.2;
    ctx.strokeStyle = COLORS.trail;
    ctx.stroke();
  }

  if (scene.marker !== null) {
    // passivity activity shows as an outer ring around the marker
    if (scene.passivityActive) {
      ctx.beginPath();
      ctx.arc(scene.marker[0], scene.marker[1], 11, 0, 2 * Math.PI);
      ctx.lineWidth = 2;
      ctx.strokeStyle = COLORS.passivityRing;
      ctx.stroke();
    }
    ctx.beginPath();
    ctx.arc(scene.marker[0], scene.marker[1], 5, 0, 2 * Math.PI);
    ctx.fillStyle = scene.infeasible ? COLORS.markerInfeasible : COLORS.marker;
    ctx.fill();
  }

  if (scene.arrowFrom !== null && scene.arrowTo !== null) {
    drawArrow(ctx, scene.arrowFrom, scene.arrowTo);
  }
  ctx.globalAlpha = 1;
}

function drawArrow(ctx: Canvas2D, from: Vec2, to: Vec2): void {
  const dx = to[0] - from[0];
  const dy = to[1] - from[1];
  const len = Math.hypot(dx, dy);
  if (len < 1e-9) return;
  ctx.beginPath();
  ctx.moveTo(from[0], from[1]);
  ctx.lineTo(to[0], to[1]);
  ctx.lineWidth = 2;
  ctx.strokeStyle = COLORS.arrow;
  ctx.stroke();
  const head = 7;
  const ang = Math.atan2(dy, dx);
  ctx.beginPath();
  ctx.moveTo(to[0], to[1]);
  ctx.lineTo(to[0] - head * Math.cos(ang - 0.5), to[1] - head * Math.sin(ang - 0.5));
  ctx.lineTo(to[0] - head * Math.cos(ang + 0.5), to[1] - head * Math.sin(ang + 0.5));
  ctx.closePath();
  ctx.fillStyle = COLORS.arrow;
  ctx.fill();
}
