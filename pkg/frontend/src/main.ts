// Operator console wiring: socket -> viewmodel -> canvas, mouse -> gaze.

import { GazePump } from "./gaze.js";
import { controlMessage, type ControlCommand } from "./protocol.js";
import { drawFrame, velocityArrowText } from "./render.js";
import { SessionSocket } from "./socket.js";
import {
  initialViewModel,
  isStale,
  reduce,
  setConnection,
  type ViewModel,
} from "./viewmodel.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;
const scoreEl = document.getElementById("score")!;
const timerEl = document.getElementById("timer")!;
const velocityEl = document.getElementById("velocity")!;
const forceFill = document.getElementById("force-fill") as HTMLDivElement;
const forceLabel = document.getElementById("force-label")!;
const gripperEl = document.getElementById("gripper")!;
const barsEl = document.getElementById("bars")!;
const feedEl = document.getElementById("feed")!;
const errorEl = document.getElementById("error")!;
const overlayToggle = document.getElementById("overlay") as HTMLInputElement;
const urlInput = document.getElementById("url") as HTMLInputElement;
const connectBtn = document.getElementById("connect") as HTMLButtonElement;

let vm: ViewModel = initialViewModel();
let socket: SessionSocket | null = null;
let pump: GazePump | null = null;

const FORCE_LIMIT_N = 30;

urlInput.value = `ws://${location.hostname || "127.0.0.1"}:8765/session`;

function connect(): void {
  socket?.close();
  pump?.dispose();
  vm = initialViewModel();
  const sock = new SessionSocket(urlInput.value, {
    onOpen() {
      vm = setConnection(vm, "open");
    },
    onClose() {
      vm = setConnection(vm, "closed");
    },
    onMessage(msg) {
      vm = reduce(vm, msg, performance.now());
    },
  });
  socket = sock;
  pump = new GazePump((msg) => sock.send(msg));
  sock.connect();
}

connectBtn.addEventListener("click", connect);

canvas.addEventListener("pointermove", (ev) => {
  if (vm.scene === null || pump === null) return;
  const rect = canvas.getBoundingClientRect();
  const u = ((ev.clientX - rect.left) / rect.width) * vm.scene.image[0];
  const v = ((ev.clientY - rect.top) / rect.height) * vm.scene.image[1];
  pump.pointerMove(u, v);
});
canvas.addEventListener("pointerleave", () => pump?.pointerLeave());

overlayToggle.addEventListener("change", () => {
  vm = { ...vm, showOverlay: overlayToggle.checked };
});

for (const cmd of ["reset", "pause", "resume", "estop_clear", "recalibrate"] as ControlCommand[]) {
  document.getElementById(`cmd-${cmd}`)?.addEventListener("click", () => {
    socket?.send(controlMessage(cmd));
  });
}

function renderSidebar(): void {
  const state = vm.state;
  statusEl.textContent = `${vm.connection}${vm.role ? ` (${vm.role})` : ""}`;
  statusEl.className = vm.connection;
  errorEl.textContent = vm.lastError ?? "";
  if (state === null || vm.scene === null) return;

  scoreEl.textContent = `${state.score} / ${vm.scene.max_score}`;
  timerEl.textContent = `${(state.t / 1000).toFixed(1)} s`;
  velocityEl.textContent = velocityArrowText(state);
  gripperEl.textContent = state.held !== null ? `${state.gripper} (cube ${state.held})` : state.gripper;

  const pct = Math.min(100, (state.force / FORCE_LIMIT_N) * 100);
  forceFill.style.width = `${pct}%`;
  forceFill.style.background = pct > 90 ? "#c0392b" : pct > 60 ? "#e67e22" : "#4daf4a";
  forceLabel.textContent = `${state.force.toFixed(1)} N`;

  barsEl.innerHTML = "";
  for (const zone of state.zones) {
    const row = document.createElement("div");
    row.className = "bar-row" + (zone.active ? " active" : "");
    const label = document.createElement("span");
    label.textContent = zone.id;
    const bar = document.createElement("div");
    bar.className = "bar";
    const fill = document.createElement("div");
    fill.style.width = `${zone.a * 100}%`;
    bar.appendChild(fill);
    row.append(label, bar);
    barsEl.appendChild(row);
  }

  feedEl.innerHTML = "";
  for (const ev of vm.feed.slice(0, 12)) {
    const li = document.createElement("li");
    if (ev.kind === "input") li.textContent = `${(ev.t / 1000).toFixed(1)}s ${ev.button} ${ev.edge}`;
    else if (ev.kind === "score") li.textContent = `${(ev.t / 1000).toFixed(1)}s block ${ev.block}: ${ev.points! > 0 ? "+" : ""}${ev.points}`;
    else li.textContent = `${(ev.t / 1000).toFixed(1)}s e-stop ${ev.engaged ? "ENGAGED" : "cleared"}`;
    feedEl.appendChild(li);
  }
}

function frame(): void {
  drawFrame(ctx, vm, isStale(vm, performance.now()));
  renderSidebar();
  requestAnimationFrame(frame);
}

connect();
requestAnimationFrame(frame);
