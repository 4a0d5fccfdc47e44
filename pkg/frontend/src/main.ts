// Browser wiring: connects the tested modules (protocol/state/input/net and
// the two renderers) to the DOM.  One render loop on requestAnimationFrame,
// one 30 Hz interval that samples the input tracker and sends the latest
// u_h, and platform event handlers feeding the tracker and the socket.

import { GAIN_KEYS, MODES } from "./protocol.js";
import type { GainKey, Mode, Vec2 } from "./protocol.js";
import { UiState } from "./state.js";
import { InputTracker, SEND_HZ } from "./input.js";
import { TeleopSocket } from "./net.js";
import type { WebSocketLike } from "./net.js";
import { drawPlane } from "./plane.js";
import type { PlaneGeometry } from "./plane.js";
import { drawStrip, STRIP_COLORS } from "./strip.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

const state = new UiState();
const tracker = new InputTracker();

const planeCanvas = el<HTMLCanvasElement>("plane");
const stripHx = el<HTMLCanvasElement>("strip-hx");
const stripHu = el<HTMLCanvasElement>("strip-hu");
const banner = el<HTMLDivElement>("banner");
const statusLine = el<HTMLDivElement>("status-line");
const modeSelect = el<HTMLSelectElement>("mode");
const scaleSlider = el<HTMLInputElement>("scale");
const gainPanel = el<HTMLDivElement>("gains");

const wsUrl = (() => {
  const params = new URLSearchParams(window.location.search);
  const explicit = params.get("ws");
  if (explicit !== null) return explicit;
  const proto = window.location.protocol === "https:" ? "wss:" : "ws:";
  return `${proto}//${window.location.hostname}:8765`;
})();

const socket = new TeleopSocket(
  wsUrl,
  (ev) => {
    if (ev.kind === "status") {
      state.setConnection(ev.status);
      banner.textContent = ev.status === "connected" ? "" : `⚠ ${ev.status} — ${wsUrl}`;
      banner.style.display = ev.status === "connected" ? "none" : "block";
    } else if (ev.kind === "message") {
      if (ev.msg.kind === "frame") {
        state.pushFrame(ev.msg);
        modeSelect.value = ev.msg.mode;
      } else if (ev.msg.kind === "hello") {
        state.hello = ev.msg;
        tracker.setClamp(state.clampBound());
      } else {
        console.warn("service rejected a command:", ev.msg.message);
      }
    } else {
      console.error("protocol error:", ev.error);
    }
  },
  (url) => new WebSocket(url) as unknown as WebSocketLike,
);

// --- input: keyboard ---------------------------------------------------------

document.addEventListener("keydown", (ev) => {
  if (ev.repeat) return;
  if (tracker.press(ev.code)) ev.preventDefault();
});
document.addEventListener("keyup", (ev) => {
  if (tracker.release(ev.code)) ev.preventDefault();
});

// --- input: pointer stick on the plane canvas --------------------------------

let pointerHeld = false;
function stickFromPointer(ev: PointerEvent): Vec2 {
  const rect = planeCanvas.getBoundingClientRect();
  const cx = rect.left + rect.width / 2;
  const cy = rect.top + rect.height / 2;
  const reach = Math.min(rect.width, rect.height) / 3;
  return [(ev.clientX - cx) / reach, (cy - ev.clientY) / reach];
}
planeCanvas.addEventListener("pointerdown", (ev) => {
  pointerHeld = true;
  planeCanvas.setPointerCapture(ev.pointerId);
  tracker.setStick(stickFromPointer(ev));
});
planeCanvas.addEventListener("pointermove", (ev) => {
  if (pointerHeld) tracker.setStick(stickFromPointer(ev));
});
for (const evName of ["pointerup", "pointercancel"] as const) {
  planeCanvas.addEventListener(evName, () => {
    pointerHeld = false;
    tracker.setStick(null);
  });
}

// --- controls ----------------------------------------------------------------

for (const mode of MODES) {
  const opt = document.createElement("option");
  opt.value = mode;
  opt.textContent = mode;
  modeSelect.appendChild(opt);
}
modeSelect.value = state.modeChoice;
modeSelect.addEventListener("change", () => {
  socket.send({ kind: "set_mode", mode: modeSelect.value as Mode });
});

scaleSlider.addEventListener("input", () => {
  tracker.scale = Number(scaleSlider.value) / 100;
});
tracker.scale = Number(scaleSlider.value) / 100;

el<HTMLButtonElement>("pause").addEventListener("click", () => socket.send({ kind: "pause" }));
el<HTMLButtonElement>("resume").addEventListener("click", () => socket.send({ kind: "resume" }));
el<HTMLButtonElement>("reset").addEventListener("click", () => socket.send({ kind: "reset" }));

const gainInputs = new Map<GainKey, HTMLInputElement>();
for (const key of GAIN_KEYS) {
  const label = document.createElement("label");
  label.textContent = key;
  const box = document.createElement("input");
  box.type = "number";
  box.step = "0.1";
  box.min = "0.001";
  box.addEventListener("change", () => {
    const val = Number(box.value);
    if (Number.isFinite(val) && val > 0) {
      socket.send({ kind: "set_gains", [key]: val });
    }
  });
  label.appendChild(box);
  gainPanel.appendChild(label);
  gainInputs.set(key, box);
}

function fillGainPanel(): void {
  const sc = state.hello?.scenario;
  if (sc === undefined) return;
  for (const [key, box] of gainInputs) {
    const val = sc[key];
    if (typeof val === "number" && box.value === "") box.value = String(val);
  }
}

// --- send loop (30 Hz) ---------------------------------------------------------

setInterval(() => {
  const u = tracker.sample(performance.now());
  state.input = u;
  socket.send({ kind: "set_human_input", u_h: u });
}, 1000 / SEND_HZ);

// --- render loop ---------------------------------------------------------------

const planeGeom: PlaneGeometry = {
  widthPx: planeCanvas.width,
  heightPx: planeCanvas.height,
  worldHalf: 2.2,
};
const stripGeom = { widthPx: stripHx.width, heightPx: stripHx.height, windowS: 30 };

function render(nowMs: number): void {
  fillGainPanel();
  const planeCtx = planeCanvas.getContext("2d");
  if (planeCtx !== null) drawPlane(planeCtx, planeGeom, state, nowMs);
  const hxCtx = stripHx.getContext("2d");
  if (hxCtx !== null) drawStrip(hxCtx, stripGeom, state.hX.data, STRIP_COLORS.line);
  const huCtx = stripHu.getContext("2d");
  if (huCtx !== null) drawStrip(huCtx, stripGeom, state.hU.data, "#b388eb");
  const f = state.frame;
  statusLine.textContent = f === null
    ? "waiting for frames…"
    : `t=${f.t.toFixed(2)}s  mode=${f.mode}  qp=${f.qp_status}`
      + `  active=[${f.active.join("+")}]  h_x=${f.h_x.toFixed(3)}  h_u=${f.h_u.toFixed(3)}`
      + `  u_h=(${state.input[0].toFixed(2)}, ${state.input[1].toFixed(2)})`;
  requestAnimationFrame(render);
}

socket.start();
requestAnimationFrame(render);
