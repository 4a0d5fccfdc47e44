// Operator input: arrow keys / WASD / an on-screen stick mapped to a clamped
// u_h vector, sampled at a fixed 30 Hz send cadence by the caller.  Holding a
// key commands a constant vector; releasing decays that axis linearly to zero
// over 200 ms so the filter's reaction stays readable instead of stepping.
// sample() never returns a non-finite or out-of-clamp value.

import type { Vec2 } from "./protocol.js";

export const SEND_HZ = 30;
export const DECAY_MS = 200;

const NEG_X = ["ArrowLeft", "KeyA"];
const POS_X = ["ArrowRight", "KeyD"];
const POS_Y = ["ArrowUp", "KeyW"];
const NEG_Y = ["ArrowDown", "KeyS"];
const ALL_KEYS = [...NEG_X, ...POS_X, ...POS_Y, ...NEG_Y];

interface AxisState {
  /** value the axis had when it last became unheld, for the decay ramp */
  releaseValue: number;
  releaseAtMs: number;
  held: boolean;
}

export class InputTracker {
  private clampBound: number;
  /** fraction of the clamp commanded by a held key (the UI's scale slider) */
  scale = 1.0;
  private keys = new Set<string>();
  private stick: Vec2 | null = null;
  private axes: [AxisState, AxisState] = [
    { releaseValue: 0, releaseAtMs: 0, held: false },
    { releaseValue: 0, releaseAtMs: 0, held: false },
  ];
  private lastValue: Vec2 = [0, 0];

  constructor(clampBound = 2.0) {
    this.clampBound = clampBound;
  }

  setClamp(bound: number): void {
    if (Number.isFinite(bound) && bound > 0) this.clampBound = bound;
  }

  /** Returns true when the code is one of ours (caller should preventDefault). */
  press(code: string): boolean {
    if (!ALL_KEYS.includes(code)) return false;
    this.keys.add(code);
    return true;
  }

  release(code: string): boolean {
    if (!ALL_KEYS.includes(code)) return false;
    this.keys.delete(code);
    return true;
  }

  /** On-screen stick: a vector in [-1,1]^2 while held, null on release. */
  setStick(v: Vec2 | null): void {
    if (v === null) {
      this.stick = null;
      return;
    }
    if (!Number.isFinite(v[0]) || !Number.isFinite(v[1])) return;
    this.stick = [Math.max(-1, Math.min(1, v[0])), Math.max(-1, Math.min(1, v[1]))];
  }

  private keyAxis(neg: string[], pos: string[]): { value: number; engaged: boolean } {
    const n = neg.some((k) => this.keys.has(k));
    const p = pos.some((k) => this.keys.has(k));
    // opposing keys cancel to zero but the axis stays engaged (no decay ramp)
    return { value: (p ? 1 : 0) - (n ? 1 : 0), engaged: n || p };
  }

  /** Current u_h at time nowMs (monotonic milliseconds). */
  sample(nowMs: number): Vec2 {
    const full = this.clampBound * this.scale;
    const engaged = this.stick !== null
      ? [{ value: this.stick[0], engaged: true }, { value: this.stick[1], engaged: true }]
      : [this.keyAxis(NEG_X, POS_X), this.keyAxis(NEG_Y, POS_Y)];
    const out: Vec2 = [0, 0];
    for (const i of [0, 1] as const) {
      const axis = this.axes[i];
      if (engaged[i]!.engaged) {
        axis.held = true;
        out[i] = engaged[i]!.value * full;
      } else {
        if (axis.held) {
          axis.held = false;
          axis.releaseValue = this.lastValue[i];
          axis.releaseAtMs = nowMs;
        }
        const ramp = Math.max(0, 1 - (nowMs - axis.releaseAtMs) / DECAY_MS);
        out[i] = axis.releaseValue * ramp;
      }
    }
    const bound = this.clampBound;
    out[0] = Math.max(-bound, Math.min(bound, out[0]));
    out[1] = Math.max(-bound, Math.min(bound, out[1]));
    if (!Number.isFinite(out[0]) || !Number.isFinite(out[1])) {
      // cannot happen with the clamps above; belt-and-braces for the wire rule
      out[0] = 0;
      out[1] = 0;
    }
    this.lastValue = [out[0], out[1]];
    return [out[0], out[1]];
  }
}
