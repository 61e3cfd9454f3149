// End-to-end: a scripted pointer trace drives the live Python session
// service through the same modules the browser console uses.
//
// Covers: fixating the close-gripper zone until the server confirms the
// activated edge and the gripper closes; leaving the canvas marks the gaze
// invalid and lets activations decay; outgoing gaze traffic stays at or
// under 50 messages per second.

import { spawn, type ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { GazePump } from "../src/gaze.js";
import { parseServerMessage, type ServerMessage, type StateMessage } from "../src/protocol.js";

const REPO_ROOT = fileURLToPath(new URL("../..", import.meta.url));
const PORT = 8900 + Math.floor(Math.random() * 500);

let server: ChildProcess;

async function waitForHealth(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`http://127.0.0.1:${PORT}/healthz`);
      if (res.ok) return;
    } catch (err) {
      lastError = err;
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error(`service never became healthy: ${lastError}`);
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "gazebot.cli", "serve", "--scene", "data/scenes/ycb.json", "--port", String(PORT)],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  await waitForHealth();
}, 40_000);

afterAll(() => {
  server?.kill();
});

class Client {
  ws: WebSocket;
  messages: ServerMessage[] = [];
  latestState: StateMessage | null = null;

  constructor() {
    this.ws = new WebSocket(`ws://127.0.0.1:${PORT}/session`);
    this.ws.on("message", (data) => {
      const msg = parseServerMessage(data.toString());
      if (msg === null) return;
      this.messages.push(msg);
      if (msg.type === "state") this.latestState = msg;
    });
  }

  open(): Promise<void> {
    return new Promise((resolve, reject) => {
      this.ws.once("open", resolve);
      this.ws.once("error", reject);
    });
  }

  send(msg: object): void {
    this.ws.send(JSON.stringify(msg));
  }

  async waitFor<T extends ServerMessage>(
    predicate: (msg: ServerMessage) => msg is T | boolean,
    timeoutMs = 15_000,
  ): Promise<T> {
    const deadline = Date.now() + timeoutMs;
    let cursor = 0;
    while (Date.now() < deadline) {
      while (cursor < this.messages.length) {
        const msg = this.messages[cursor++];
        if (predicate(msg)) return msg as T;
      }
      await new Promise((r) => setTimeout(r, 20));
    }
    throw new Error("timed out waiting for a matching message");
  }

  close(): void {
    this.ws.close();
  }
}

function zoneCentroid(state: StateMessage, id: string): [number, number] {
  const zone = state.zones.find((z) => z.id === id);
  if (!zone) throw new Error(`zone ${id} missing from state`);
  const u = zone.quad.reduce((acc, p) => acc + p[0], 0) / zone.quad.length;
  const v = zone.quad.reduce((acc, p) => acc + p[1], 0) / zone.quad.length;
  return [u, v];
}

describe("operator console against the live service", () => {
  it(
    "close-gripper fixation activates and closes; leaving decays; rate capped",
    { timeout: 60_000 },
    async () => {
      const client = new Client();
      await client.open();
      const hello = await client.waitFor((m) => m.type === "hello");
      expect((hello as { role: string }).role).toBe("controller");

      const first = await client.waitFor<StateMessage>((m) => m.type === "state");
      expect(first.gripper).toBe("open");

      // scripted pointer trace: a 200 Hz pointer parked on the close zone,
      // throttled to the gaze channel by the same pump the browser uses
      const sendTimes: number[] = [];
      const pump = new GazePump((msg) => {
        sendTimes.push(performance.now());
        client.send(msg);
      });
      const pointer = setInterval(() => {
        const state = client.latestState;
        if (state === null) return;
        const [u, v] = zoneCentroid(state, "grip_close");
        // a little wobble, like a hand on a mouse
        pump.pointerMove(u + (Math.random() - 0.5) * 6, v + (Math.random() - 0.5) * 6);
      }, 5);

      try {
        const activated = await client.waitFor(
          (m) =>
            m.type === "event" &&
            m.kind === "input" &&
            m.button === "grip_close" &&
            m.edge === "activated",
        );
        expect(activated).toBeDefined();
        await client.waitFor((m) => m.type === "state" && m.gripper === "closed");
      } finally {
        clearInterval(pointer);
      }

      // rate cap: at most one gaze message per 20 ms. The pump enforces the
      // spacing against its own clock (pinned exactly by the unit tests);
      // timestamps taken in the send callback carry ~0.2 ms of jitter, so
      // the wall-clock check gets a matching tolerance.
      expect(pump.sent).toBeGreaterThan(10);
      const spanS = (sendTimes[sendTimes.length - 1] - sendTimes[0]) / 1000;
      expect((sendTimes.length - 1) / spanS).toBeLessThanOrEqual(50.5);

      // cursor leaves the canvas: stream goes invalid, activations decay
      pump.pointerLeave();
      const decayed = await client.waitFor(
        (m) =>
          m.type === "state" &&
          (m.gaze === null || !m.gaze.valid) &&
          m.zones.every((z) => z.a === 0),
      );
      expect(decayed).toBeDefined();
      pump.dispose();

      // tidy up for any later suite run against the same server
      client.send({ v: 1, type: "control", cmd: "reset" });
      await client.waitFor((m) => m.type === "state" && m.gripper === "open");
      client.close();
    },
  );

  it("read-only observers get an error when they try to steer", { timeout: 30_000 }, async () => {
    // the previous test's socket may still be releasing the controller
    // slot; retry until this connection owns it
    let controller = new Client();
    for (let attempt = 0; attempt < 25; attempt++) {
      await controller.open();
      const hello = await controller.waitFor((m) => m.type === "hello");
      if ((hello as { role: string }).role === "controller") break;
      controller.close();
      await new Promise((r) => setTimeout(r, 200));
      controller = new Client();
    }

    const observer = new Client();
    await observer.open();
    const hello = await observer.waitFor((m) => m.type === "hello");
    expect((hello as { role: string }).role).toBe("observer");

    observer.send({ v: 1, type: "gaze", gaze: { u: 10, v: 10, valid: true } });
    const err = await observer.waitFor((m) => m.type === "error");
    expect((err as { message: string }).message).toContain("read-only");

    controller.close();
    observer.close();
  });
});
