import { describe, expect, it } from "vitest";

import { GazePump, MIN_INTERVAL_MS } from "../src/gaze.js";
import type { GazeMessage } from "../src/protocol.js";

/** Deterministic clock plus a manual trailing-edge scheduler. */
function harness() {
  const sent: { msg: GazeMessage; at: number }[] = [];
  let now = 0;
  const timers: { fire: number; fn: () => void; cancelled: boolean }[] = [];
  const pump = new GazePump(
    (msg) => sent.push({ msg, at: now }),
    () => now,
    (fn, delay) => {
      const timer = { fire: now + delay, fn, cancelled: false };
      timers.push(timer);
      return () => {
        timer.cancelled = true;
      };
    },
  );
  const advance = (ms: number) => {
    const target = now + ms;
    for (const t of [...timers].sort((a, b) => a.fire - b.fire)) {
      if (!t.cancelled && t.fire <= target) {
        now = Math.max(now, t.fire);
        t.cancelled = true;
        t.fn();
      }
    }
    now = target;
  };
  return { pump, sent, advance };
}

describe("GazePump", () => {
  it("sends the first sample immediately", () => {
    const { pump, sent } = harness();
    pump.pointerMove(100, 200);
    expect(sent).toHaveLength(1);
    expect(sent[0].msg).toEqual({ v: 1, type: "gaze", gaze: { u: 100, v: 200, valid: true } });
  });

  it("caps the message rate at 50 per second", () => {
    const { pump, sent, advance } = harness();
    // a 1 kHz pointer for one second
    for (let k = 0; k < 1000; k++) {
      pump.pointerMove(k, k);
      advance(1);
    }
    // fencepost: a closed 1 s window fits 51 sends at exact 20 ms spacing
    expect(sent.length).toBeLessThanOrEqual(1000 / MIN_INTERVAL_MS + 1);
    expect(sent.length).toBeGreaterThan(40); // but close to the cap, not starved
    for (let i = 1; i < sent.length; i++) {
      expect(sent[i].at - sent[i - 1].at).toBeGreaterThanOrEqual(MIN_INTERVAL_MS);
    }
    const spanS = (sent[sent.length - 1].at - sent[0].at) / 1000;
    expect((sent.length - 1) / spanS).toBeLessThanOrEqual(50);
  });

  it("delivers the newest coalesced sample on the trailing edge", () => {
    const { pump, sent, advance } = harness();
    pump.pointerMove(1, 1);
    advance(5);
    pump.pointerMove(2, 2); // throttled
    advance(5);
    pump.pointerMove(3, 3); // replaces the pending sample
    advance(30);
    expect(sent.map((s) => s.msg.gaze.u)).toEqual([1, 3]);
  });

  it("pointer leave marks the stream invalid", () => {
    const { pump, sent, advance } = harness();
    pump.pointerMove(50, 60);
    advance(25);
    pump.pointerLeave();
    expect(sent[sent.length - 1].msg.gaze.valid).toBe(false);
  });

  it("leave inside the throttle window still goes out, once", () => {
    const { pump, sent, advance } = harness();
    pump.pointerMove(50, 60);
    pump.pointerLeave(); // within 20 ms of the move
    expect(sent).toHaveLength(1);
    advance(MIN_INTERVAL_MS + 1);
    expect(sent).toHaveLength(2);
    expect(sent[1].msg.gaze.valid).toBe(false);
  });

  it("dispose cancels any pending trailing send", () => {
    const { pump, sent, advance } = harness();
    pump.pointerMove(1, 1);
    pump.pointerMove(2, 2);
    pump.dispose();
    advance(100);
    expect(sent).toHaveLength(1);
  });
});
