// Barrier strip charts: a rolling line for h_x or h_u against a zero line,
// with intervals where the value is negative shaded.  stripScene() is pure --
// it interpolates exact zero crossings so the shading starts and ends where
// the sign actually changes -- and drawStrip() paints the scene.

import type { Canvas2D } from "./plane.js";
import type { Sample } from "./state.js";

export interface StripScene {
  /** screen-space polyline of the samples, left-to-right */
  path: Array<[number, number]>;
  /** screen-space x-intervals where the value is below zero */
  shade: Array<[number, number]>;
  zeroY: number;
  yMin: number;
  yMax: number;
}

export interface StripGeometry {
  widthPx: number;
  heightPx: number;
  /** seconds of history shown; right edge is the newest sample */
  windowS: number;
}

/** Maximal [t0, t1] intervals where the piecewise-linear signal is negative. */
export function negativeIntervals(samples: readonly Sample[]): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  let start: number | null = null;
  for (let i = 0; i < samples.length; i++) {
    const s = samples[i]!;
    const prev = i > 0 ? samples[i - 1]! : null;
    if (prev !== null && prev.value >= 0 !== s.value >= 0) {
      // linear interpolation of the crossing time
      const tc = prev.t + (s.t - prev.t) * (0 - prev.value) / (s.value - prev.value);
      if (s.value < 0) start = tc;
      else if (start !== null) {
        out.push([start, tc]);
        start = null;
      }
    } else if (prev === null && s.value < 0) {
      start = s.t;
    }
  }
  if (start !== null && samples.length > 0) {
    out.push([start, samples[samples.length - 1]!.t]);
  }
  return out;
}

export function stripScene(samples: readonly Sample[], g: StripGeometry): StripScene {
  const scene: StripScene = { path: [], shade: [], zeroY: g.heightPx / 2, yMin: -1, yMax: 1 };
  if (samples.length === 0) return scene;
  const tEnd = samples[samples.length - 1]!.t;
  const tStart = tEnd - g.windowS;
  let lo = 0;
  let hi = 0;
  for (const s of samples) {
    lo = Math.min(lo, s.value);
    hi = Math.max(hi, s.value);
  }
  // always include zero with a little headroom so the zero line is visible
  const pad = 0.1 * Math.max(hi - lo, 1e-6);
  scene.yMin = lo - pad;
  scene.yMax = hi + pad;
  const x = (t: number) => ((t - tStart) / g.windowS) * g.widthPx;
  const y = (v: number) => g.heightPx - ((v - scene.yMin) / (scene.yMax - scene.yMin)) * g.heightPx;
  scene.zeroY = y(0);
  scene.path = samples.map((s) => [x(s.t), y(s.value)]);
  scene.shade = negativeIntervals(samples).map(([a, b]) => [x(a), x(b)]);
  return scene;
}

export const STRIP_COLORS = {
  background: "#10141a",
  line: "#5fa8d3",
  zero: "#6c757d",
  shade: "rgba(214, 69, 69, 0.3)",
};

export function drawStrip(ctx: Canvas2D, g: StripGeometry, samples: readonly Sample[], lineColor = STRIP_COLORS.line): void {
  ctx.globalAlpha = 1;
  ctx.fillStyle = STRIP_COLORS.background;
  ctx.fillRect(0, 0, g.widthPx, g.heightPx);
  const scene = stripScene(samples, g);
  if (scene.path.length === 0) return;
  for (const [x0, x1] of scene.shade) {
    ctx.fillStyle = STRIP_COLORS.shade;
    ctx.fillRect(x0, 0, Math.max(x1 - x0, 1), g.heightPx);
  }
  ctx.beginPath();
  ctx.moveTo(0, scene.zeroY);
  ctx.lineTo(g.widthPx, scene.zeroY);
  ctx.lineWidth = 1;
  ctx.strokeStyle = STRIP_COLORS.zero;
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(scene.path[0]![0], scene.path[0]![1]);
  for (const p of scene.path.slice(1)) ctx.lineTo(p[0], p[1]);
  ctx.lineWidth = 1.5;
  ctx.strokeStyle = lineColor;
  ctx.stroke();
}
