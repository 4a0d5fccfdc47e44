// Live acceptance: a scripted client holding u_h = (-0.3, 0) in mode both
// against a real spawned service.  Exercises the same TeleopSocket/protocol
// stack the browser UI uses -- only the WebSocket implementation differs.
//
// Asserts: frames arrive at >= 30 per wall second, every frame satisfies
// h_x >= -1e-4, the marker settles within 5e-2 of (-1, 0), and a
// set_human_input command is reflected in uhat within 3 frames.

import { spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { performance } from "node:perf_hooks";
import { expect, test } from "vitest";
import WebSocket from "ws";

import { TeleopSocket } from "../src/net.js";
import type { WebSocketLike } from "../src/net.js";
import type { Hello, StateFrame } from "../src/protocol.js";

// Adapt the node ws client to the browser-shaped WebSocketLike: ws hands text
// frames to onmessage as Buffers, while a browser WebSocket delivers strings.
function nodeSocket(url: string): WebSocketLike {
  const sock = new WebSocket(url);
  const like: WebSocketLike = {
    onopen: null,
    onclose: null,
    onerror: null,
    onmessage: null,
    get readyState() {
      return sock.readyState;
    },
    send: (data: string) => sock.send(data),
    close: () => sock.close(),
  };
  sock.on("open", () => like.onopen?.());
  sock.on("close", () => like.onclose?.());
  sock.on("error", () => like.onerror?.());
  sock.on("message", (data, isBinary) => {
    like.onmessage?.({ data: isBinary ? data : data.toString() });
  });
  return like;
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const addr = srv.address();
      if (addr === null || typeof addr === "string") {
        reject(new Error("no port"));
        return;
      }
      srv.close(() => resolve(addr.port));
    });
  });
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor(pred: () => boolean, ms: number, what: string): Promise<void> {
  const deadline = performance.now() + ms;
  while (!pred()) {
    if (performance.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(10);
  }
}

function stopProcess(proc: ChildProcess): Promise<void> {
  return new Promise((resolve) => {
    proc.once("exit", () => resolve());
    proc.kill("SIGINT");
    setTimeout(() => {
      proc.kill("SIGKILL");
      resolve();
    }, 5000).unref();
  });
}

test("A10: scripted hold in mode both stays safe, parks, and reflects input", async () => {
  const dir = mkdtempSync(join(tmpdir(), "teleop-a10-"));
  const scenarioPath = join(dir, "live.txt");
  writeFileSync(scenarioPath, "mode = both\nu_h = live -0.3, 0\n");
  const port = await freePort();
  const proc = spawn(
    "python3",
    ["-m", "safeteleop", "serve", "--bind", `127.0.0.1:${port}`, "--scenario", scenarioPath],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  let serverErr = "";
  proc.stderr!.on("data", (chunk: Buffer) => { serverErr += chunk.toString(); });

  const frames: Array<{ frame: StateFrame; atMs: number }> = [];
  let hello: Hello | null = null;
  const protocolErrors: Error[] = [];
  let connected = false;
  const socket = new TeleopSocket(
    `ws://127.0.0.1:${port}`,
    (ev) => {
      if (ev.kind === "status") connected = ev.status === "connected";
      else if (ev.kind === "protocol-error") protocolErrors.push(ev.error);
      else if (ev.msg.kind === "hello") hello = ev.msg;
      else if (ev.msg.kind === "frame") frames.push({ frame: ev.msg, atMs: performance.now() });
    },
    nodeSocket,
  );

  let hold: ReturnType<typeof setInterval> | null = null;
  try {
    socket.start();
    await waitFor(() => connected && hello !== null, 15000, `service on :${port} (${serverErr})`);
    const scenario = hello!.scenario;
    const kP = scenario["k_P"] as number;
    const kD = scenario["k_D"] as number;
    expect(typeof kP).toBe("number");
    expect(typeof kD).toBe("number");

    // the scripted operator: hold u_h = (-0.3, 0) at the UI's send cadence
    hold = setInterval(() => socket.send({ kind: "set_human_input", u_h: [-0.3, 0] }), 33);

    await waitFor(() => frames.length >= 1, 5000, "first frame");
    const t0 = frames[0]!.atMs;
    await waitFor(
      () => frames[frames.length - 1]!.atMs - t0 >= 5500,
      20000,
      "5.5 s of frames",
    );
    if (hold !== null) clearInterval(hold);
    hold = null;

    // frame rate over the whole observation window
    const span = (frames[frames.length - 1]!.atMs - t0) / 1000;
    const fps = (frames.length - 1) / span;
    expect(fps).toBeGreaterThanOrEqual(30);

    // the safety floor holds on every received frame
    for (const { frame } of frames) {
      expect(frame.h_x).toBeGreaterThanOrEqual(-1e-4);
      expect(frame.qp_status).toBe("optimal");
    }

    // gap-free per-connection sequence numbers
    for (let i = 1; i < frames.length; i++) {
      expect(frames[i]!.frame.seq).toBe(frames[i - 1]!.frame.seq + 1);
    }

    // the marker parks at the closest safe point to the held target
    const settled = frames.filter(({ frame }) => frame.t >= 4.0);
    expect(settled.length).toBeGreaterThan(20);
    for (const { frame } of settled) {
      const err = Math.hypot(frame.x1[0] - -1.0, frame.x1[1] - 0.0);
      expect(err).toBeLessThanOrEqual(5e-2);
    }

    // a set_human_input command shows up in uhat within 3 frames
    const seqAtSend = frames[frames.length - 1]!.frame.seq;
    const probe: [number, number] = [0.55, -0.35];
    expect(socket.send({ kind: "set_human_input", u_h: probe })).toBe(true);
    await waitFor(
      () => frames[frames.length - 1]!.frame.seq >= seqAtSend + 3,
      5000,
      "frames after the probe",
    );
    const window = frames
      .map(({ frame }) => frame)
      .filter((f) => f.seq > seqAtSend && f.seq <= seqAtSend + 3);
    const reflected = window.some((f) => {
      const uh0 = f.uhat[0] + kP * f.x1[0] + kD * f.x2[0];
      const uh1 = f.uhat[1] + kP * f.x1[1] + kD * f.x2[1];
      return Math.abs(uh0 - probe[0]) < 1e-9 && Math.abs(uh1 - probe[1]) < 1e-9;
    });
    expect(reflected).toBe(true);

    // strict decoding stayed clean for the entire session
    expect(protocolErrors).toEqual([]);
  } finally {
    if (hold !== null) clearInterval(hold);
    socket.stop();
    await stopProcess(proc);
    rmSync(dir, { recursive: true, force: true });
  }
}, 45000);
