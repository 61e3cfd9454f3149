// Canvas renderer. Everything arrives in camera pixel coordinates from the
// server, so drawing is a direct pass-through scaled to the canvas size.

import type { StateMessage, ZoneState } from "./protocol.js";
import type { ViewModel } from "./viewmodel.js";

const COLORS = {
  table: "#1c1f26",
  sheet: "#f5f2e9",
  square: "#8a8577",
  cube: "#d95f02",
  cubeHeld: "#e6ab02",
  ee: "#4daf4a",
  zone: "0, 140, 255",
  zoneActive: "40, 200, 120",
  gaze: "#ff3366",
};

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  vm: ViewModel,
  stale: boolean,
): void {
  const canvas = ctx.canvas;
  ctx.fillStyle = COLORS.table;
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const state = vm.state;
  const scene = vm.scene;
  if (state === null || scene === null) {
    banner(ctx, "waiting for state...");
    return;
  }
  const sx = canvas.width / scene.image[0];
  const sy = canvas.height / scene.image[1];
  ctx.save();
  ctx.scale(sx, sy);

  if (state.sheet_px) {
    poly(ctx, state.sheet_px);
    ctx.fillStyle = COLORS.sheet;
    ctx.fill();
  }
  for (const square of state.squares_px ?? []) {
    if (!square) continue;
    poly(ctx, square);
    ctx.strokeStyle = "#555";
    ctx.lineWidth = 2;
    ctx.stroke();
  }
  state.cubes_px?.forEach((cube, i) => {
    if (!cube) return;
    poly(ctx, cube);
    ctx.fillStyle = state.held === i ? COLORS.cubeHeld : COLORS.cube;
    ctx.fill();
  });
  if (state.ee_px) {
    const [u, v] = state.ee_px;
    ctx.beginPath();
    ctx.arc(u, v, 14, 0, Math.PI * 2);
    ctx.strokeStyle = COLORS.ee;
    ctx.lineWidth = 4;
    ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(u - 20, v);
    ctx.lineTo(u + 20, v);
    ctx.moveTo(u, v - 20);
    ctx.lineTo(u, v + 20);
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }

  for (const zone of state.zones) {
    drawZone(ctx, zone, vm.showOverlay);
  }

  if (state.gaze && state.gaze.valid) {
    ctx.beginPath();
    ctx.arc(state.gaze.u, state.gaze.v, 10, 0, Math.PI * 2);
    ctx.strokeStyle = COLORS.gaze;
    ctx.lineWidth = 3;
    ctx.stroke();
  }
  ctx.restore();

  if (state.estop) banner(ctx, "EMERGENCY STOP", "#c0392b");
  else if (state.paused) banner(ctx, "paused", "#777");
  else if (stale) banner(ctx, "stale state", "#a07000");
}

function drawZone(ctx: CanvasRenderingContext2D, zone: ZoneState, overlay: boolean): void {
  if (!zone.visible) return;
  // fill intensity follows the activation level even with outlines hidden,
  // so feedback survives the "unaltered view" mode
  if (zone.a > 0) {
    poly(ctx, zone.quad);
    const rgb = zone.active ? COLORS.zoneActive : COLORS.zone;
    ctx.fillStyle = `rgba(${rgb}, ${0.15 + 0.5 * zone.a})`;
    ctx.fill();
  }
  if (overlay) {
    poly(ctx, zone.quad);
    ctx.strokeStyle = zone.active ? `rgb(${COLORS.zoneActive})` : `rgb(${COLORS.zone})`;
    ctx.lineWidth = zone.active ? 4 : 2;
    ctx.stroke();
  }
}

function poly(ctx: CanvasRenderingContext2D, points: [number, number][]): void {
  ctx.beginPath();
  ctx.moveTo(points[0][0], points[0][1]);
  for (const [u, v] of points.slice(1)) ctx.lineTo(u, v);
  ctx.closePath();
}

function banner(ctx: CanvasRenderingContext2D, text: string, color = "#888"): void {
  ctx.save();
  ctx.fillStyle = color;
  ctx.globalAlpha = 0.9;
  ctx.fillRect(0, 0, ctx.canvas.width, 36);
  ctx.fillStyle = "#fff";
  ctx.globalAlpha = 1;
  ctx.font = "bold 18px system-ui, sans-serif";
  ctx.textBaseline = "middle";
  ctx.fillText(text, 12, 18);
  ctx.restore();
}

export function velocityArrowText(state: StateMessage): string {
  const [vx, vy, vz] = state.velocity;
  const fmt = (n: number) => (n >= 0 ? "+" : "") + n.toFixed(3);
  return `v = [${fmt(vx)}, ${fmt(vy)}, ${fmt(vz)}] m/s`;
}
