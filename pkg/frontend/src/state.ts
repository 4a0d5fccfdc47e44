// Client-side state: the latest frame, rolling 30-second buffers of the
// barrier values and correction magnitude, and the trajectory trail.  All
// mutation happens through pushFrame/setConnection so invariants (buffers
// time-ordered, trail bounded) hold everywhere else by construction.

import type { Hello, Mode, StateFrame, Vec2 } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "reconnecting" | "closed";

export interface Sample {
  t: number;
  value: number;
}

/** Time-ordered rolling window of samples, trimmed to the last `windowS` seconds. */
export class SeriesBuffer {
  readonly windowS: number;
  private samples: Sample[] = [];

  constructor(windowS = 30) {
    this.windowS = windowS;
  }

  push(t: number, value: number): void {
    const last = this.samples[this.samples.length - 1];
    if (last !== undefined && t < last.t) {
      // time went backwards (service reset): start a fresh window
      this.samples = [];
    }
    this.samples.push({ t, value });
    const cutoff = t - this.windowS;
    let drop = 0;
    while (drop < this.samples.length - 1 && this.samples[drop]!.t < cutoff) drop += 1;
    if (drop > 0) this.samples = this.samples.slice(drop);
  }

  get data(): readonly Sample[] {
    return this.samples;
  }

  clear(): void {
    this.samples = [];
  }
}

const TRAIL_CAP = 1500; // 30 s of positions at the nominal 50 frames/s

export class UiState {
  connection: ConnectionStatus = "connecting";
  hello: Hello | null = null;
  frame: StateFrame | null = null;
  trail: Vec2[] = [];
  readonly hX = new SeriesBuffer();
  readonly hU = new SeriesBuffer();
  readonly vNorm = new SeriesBuffer();
  /** What the operator is currently commanding (last value sent). */
  input: Vec2 = [0, 0];
  modeChoice: Mode = "both";

  pushFrame(frame: StateFrame): void {
    const prev = this.frame;
    if (prev !== null && frame.t < prev.t) {
      this.trail = []; // service reset: the old path no longer belongs to this run
    }
    this.frame = frame;
    this.modeChoice = frame.mode;
    this.trail.push([frame.x1[0], frame.x1[1]]);
    if (this.trail.length > TRAIL_CAP) this.trail.splice(0, this.trail.length - TRAIL_CAP);
    this.hX.push(frame.t, frame.h_x);
    this.hU.push(frame.t, frame.h_u);
    this.vNorm.push(frame.t, Math.hypot(frame.v_star[0], frame.v_star[1]));
  }

  setConnection(status: ConnectionStatus): void {
    this.connection = status;
  }

  clampBound(): number {
    const raw = this.hello?.scenario["u_h_clamp"];
    return typeof raw === "number" && Number.isFinite(raw) && raw > 0 ? raw : 2.0;
  }
}
