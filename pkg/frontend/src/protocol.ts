// Wire protocol for the safeteleop live service, schema_version 1.
//
// Everything on the socket is a JSON text frame.  Decoding is strict, the
// same way the server decodes commands: the key set must match exactly, every
// number must be finite, and anything else raises ProtocolError rather than
// being silently patched up.  JSON.parse already rejects bare NaN/Infinity
// tokens, so finiteness checks here guard against nulls and wrong types.

export const SCHEMA_VERSION = 1;

export type Vec2 = [number, number];
export type Mode = "none" | "passivity" | "safety" | "both";
export type RowTag = "safety" | "passivity";
export type QpStatus = "optimal" | "infeasible";

export const MODES: readonly Mode[] = ["none", "passivity", "safety", "both"];
export const GAIN_KEYS = [
  "k_P", "k_D", "beta", "kappa1", "kappa2", "gamma_x", "gamma_u",
] as const;
export type GainKey = (typeof GAIN_KEYS)[number];

export interface StateFrame {
  kind: "frame";
  seq: number;
  t: number;
  x1: Vec2;
  x2: Vec2;
  u: Vec2;
  uhat: Vec2;
  v_star: Vec2;
  h_x: number;
  h_u: number;
  mode: Mode;
  qp_status: QpStatus;
  active: RowTag[];
  wall_ms: number;
}

export interface Hello {
  kind: "hello";
  schema_version: number;
  scenario: Record<string, unknown>;
}

export interface ErrorMsg {
  kind: "error";
  message: string;
}

export type ServerMessage = StateFrame | Hello | ErrorMsg;

export type ClientCommand =
  | { kind: "set_human_input"; u_h: Vec2 }
  | { kind: "set_mode"; mode: Mode }
  | ({ kind: "set_gains" } & Partial<Record<GainKey, number>>)
  | { kind: "reset"; x0?: [number, number, number, number] }
  | { kind: "pause" }
  | { kind: "resume" };

export class ProtocolError extends Error {}

const FRAME_KEYS = [
  "kind", "seq", "t", "x1", "x2", "u", "uhat", "v_star",
  "h_x", "h_u", "mode", "qp_status", "active", "wall_ms",
] as const;

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function requireKeys(obj: Record<string, unknown>, keys: readonly string[], what: string): void {
  const have = Object.keys(obj);
  const extra = have.filter((k) => !keys.includes(k));
  const missing = keys.filter((k) => !have.includes(k));
  if (extra.length > 0) throw new ProtocolError(`${what}: unknown key(s) ${extra.join(", ")}`);
  if (missing.length > 0) throw new ProtocolError(`${what}: missing key(s) ${missing.join(", ")}`);
}

function finiteNumber(v: unknown, what: string): number {
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new ProtocolError(`${what}: expected a finite number, got ${JSON.stringify(v)}`);
  }
  return v;
}

function finiteVec2(v: unknown, what: string): Vec2 {
  if (!Array.isArray(v) || v.length !== 2) {
    throw new ProtocolError(`${what}: expected a 2-vector`);
  }
  return [finiteNumber(v[0], what), finiteNumber(v[1], what)];
}

function decodeFrame(obj: Record<string, unknown>): StateFrame {
  requireKeys(obj, FRAME_KEYS, "frame");
  const seq = finiteNumber(obj.seq, "frame.seq");
  if (!Number.isInteger(seq) || seq < 0) {
    throw new ProtocolError(`frame.seq: expected a nonnegative integer, got ${seq}`);
  }
  const mode = obj.mode;
  if (typeof mode !== "string" || !MODES.includes(mode as Mode)) {
    throw new ProtocolError(`frame.mode: unknown mode ${JSON.stringify(mode)}`);
  }
  const qp = obj.qp_status;
  if (qp !== "optimal" && qp !== "infeasible") {
    throw new ProtocolError(`frame.qp_status: expected optimal|infeasible, got ${JSON.stringify(qp)}`);
  }
  const activeRaw = obj.active;
  if (!Array.isArray(activeRaw)) throw new ProtocolError("frame.active: expected an array");
  const active = activeRaw.map((tag) => {
    if (tag !== "safety" && tag !== "passivity") {
      throw new ProtocolError(`frame.active: unknown row tag ${JSON.stringify(tag)}`);
    }
    return tag;
  });
  return {
    kind: "frame",
    seq,
    t: finiteNumber(obj.t, "frame.t"),
    x1: finiteVec2(obj.x1, "frame.x1"),
    x2: finiteVec2(obj.x2, "frame.x2"),
    u: finiteVec2(obj.u, "frame.u"),
    uhat: finiteVec2(obj.uhat, "frame.uhat"),
    v_star: finiteVec2(obj.v_star, "frame.v_star"),
    h_x: finiteNumber(obj.h_x, "frame.h_x"),
    h_u: finiteNumber(obj.h_u, "frame.h_u"),
    mode: mode as Mode,
    qp_status: qp,
    active,
    wall_ms: finiteNumber(obj.wall_ms, "frame.wall_ms"),
  };
}

function decodeHello(obj: Record<string, unknown>): Hello {
  requireKeys(obj, ["kind", "schema_version", "scenario"], "hello");
  const v = finiteNumber(obj.schema_version, "hello.schema_version");
  if (v !== SCHEMA_VERSION) {
    throw new ProtocolError(`hello.schema_version: expected ${SCHEMA_VERSION}, got ${v}`);
  }
  if (!isRecord(obj.scenario)) throw new ProtocolError("hello.scenario: expected an object");
  return { kind: "hello", schema_version: v, scenario: obj.scenario };
}

function decodeError(obj: Record<string, unknown>): ErrorMsg {
  requireKeys(obj, ["kind", "message"], "error");
  if (typeof obj.message !== "string") throw new ProtocolError("error.message: expected a string");
  return { kind: "error", message: obj.message };
}

export function decodeServerMessage(text: string): ServerMessage {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch (e) {
    throw new ProtocolError(`not valid JSON: ${(e as Error).message}`);
  }
  if (!isRecord(parsed)) throw new ProtocolError("expected a JSON object");
  switch (parsed.kind) {
    case "frame":
      return decodeFrame(parsed);
    case "hello":
      return decodeHello(parsed);
    case "error":
      return decodeError(parsed);
    default:
      throw new ProtocolError(`unknown message kind ${JSON.stringify(parsed.kind)}`);
  }
}

function assertFinitePair(v: Vec2, what: string): void {
  if (!Number.isFinite(v[0]) || !Number.isFinite(v[1])) {
    throw new ProtocolError(`${what}: refusing to send non-finite values`);
  }
}

export function encodeCommand(cmd: ClientCommand): string {
  switch (cmd.kind) {
    case "set_human_input":
      assertFinitePair(cmd.u_h, "set_human_input.u_h");
      return JSON.stringify({ kind: "set_human_input", u_h: cmd.u_h });
    case "set_mode":
      if (!MODES.includes(cmd.mode)) throw new ProtocolError(`set_mode: unknown mode ${cmd.mode}`);
      return JSON.stringify({ kind: "set_mode", mode: cmd.mode });
    case "set_gains": {
      const out: Record<string, unknown> = { kind: "set_gains" };
      let any = false;
      for (const key of GAIN_KEYS) {
        const val = cmd[key];
        if (val === undefined) continue;
        if (!Number.isFinite(val) || val <= 0) {
          throw new ProtocolError(`set_gains.${key}: expected a positive finite number`);
        }
        out[key] = val;
        any = true;
      }
      if (!any) throw new ProtocolError("set_gains: at least one gain required");
      return JSON.stringify(out);
    }
    case "reset":
      if (cmd.x0 !== undefined) {
        if (cmd.x0.length !== 4 || cmd.x0.some((c) => !Number.isFinite(c))) {
          throw new ProtocolError("reset.x0: expected a finite 4-vector");
        }
        return JSON.stringify({ kind: "reset", x0: cmd.x0 });
      }
      return JSON.stringify({ kind: "reset" });
    case "pause":
    case "resume":
      return JSON.stringify({ kind: cmd.kind });
  }
}
