// Client-side view state. Pure reducer over server messages: the UI holds
// no simulation of its own, so refreshing the page never changes the world.

import type { EventMessage, HelloMessage, ServerMessage, StateMessage } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface ViewModel {
  connection: ConnectionStatus;
  role: "controller" | "observer" | null;
  scene: HelloMessage["scene"] | null;
  state: StateMessage | null;
  lastStateAt: number | null; // wall-clock ms of the newest state frame
  feed: EventMessage[]; // most recent first, bounded
  lastError: string | null;
  showOverlay: boolean;
}

export const FEED_LIMIT = 30;

export function initialViewModel(): ViewModel {
  return {
    connection: "connecting",
    role: null,
    scene: null,
    state: null,
    lastStateAt: null,
    feed: [],
    lastError: null,
    showOverlay: true,
  };
}

export function reduce(vm: ViewModel, msg: ServerMessage, nowMs: number): ViewModel {
  switch (msg.type) {
    case "hello":
      return { ...vm, role: msg.role, scene: msg.scene, lastError: null };
    case "state": {
      if (vm.state !== null && msg.frame <= vm.state.frame) return vm; // stale frame
      return { ...vm, state: msg, lastStateAt: nowMs };
    }
    case "event":
      return { ...vm, feed: [msg, ...vm.feed].slice(0, FEED_LIMIT) };
    case "error":
      return { ...vm, lastError: msg.message };
  }
}

export function setConnection(vm: ViewModel, connection: ConnectionStatus): ViewModel {
  // dropping the link demotes us until the server re-grants a role
  return connection === "open"
    ? { ...vm, connection }
    : { ...vm, connection, role: null };
}

export function isStale(vm: ViewModel, nowMs: number, limitMs = 500): boolean {
  return vm.lastStateAt === null || nowMs - vm.lastStateAt > limitMs;
}
