// Mouse-as-gaze pump. The tracker hardware this stands in for emits a 2D
// point stream at 50 Hz, so outgoing messages are capped at one per 20 ms
// no matter how fast pointer events arrive; leaving the canvas sends a
// single valid=false sample (the blink analogue).

import { gazeMessage, type GazeMessage } from "./protocol.js";

export const MIN_INTERVAL_MS = 20;

type Scheduler = (fn: () => void, delayMs: number) => () => void;

const defaultScheduler: Scheduler = (fn, delay) => {
  const id = setTimeout(fn, delay);
  return () => clearTimeout(id);
};

export class GazePump {
  private lastSentAt = -Infinity;
  private pending: GazeMessage | null = null;
  private cancelTrailing: (() => void) | null = null;
  sent = 0;

  constructor(
    private readonly send: (msg: GazeMessage) => void,
    private readonly now: () => number = () => performance.now(),
    private readonly schedule: Scheduler = defaultScheduler,
  ) {}

  pointerMove(u: number, v: number): void {
    this.submit(gazeMessage(u, v, true));
  }

  pointerLeave(): void {
    this.submit(gazeMessage(0, 0, false));
  }

  private submit(msg: GazeMessage): void {
    const now = this.now();
    if (now - this.lastSentAt >= MIN_INTERVAL_MS) {
      this.emit(msg, now);
      return;
    }
    // coalesce: remember only the newest sample, deliver it on the trailing
    // edge so a final position (or a leave) is never lost
    this.pending = msg;
    if (this.cancelTrailing === null) {
      const delay = MIN_INTERVAL_MS - (now - this.lastSentAt);
      this.cancelTrailing = this.schedule(() => this.flushTrailing(), delay);
    }
  }

  private flushTrailing(): void {
    this.cancelTrailing = null;
    if (this.pending === null) return;
    // timers can fire fractionally early; re-check the spacing contract
    const now = this.now();
    const remaining = MIN_INTERVAL_MS - (now - this.lastSentAt);
    if (remaining > 0) {
      this.cancelTrailing = this.schedule(
        () => this.flushTrailing(),
        Math.max(1, Math.ceil(remaining)),
      );
      return;
    }
    this.emit(this.pending, now);
  }

  private emit(msg: GazeMessage, now: number): void {
    this.pending = null;
    this.lastSentAt = now;
    this.sent += 1;
    this.send(msg);
  }

  dispose(): void {
    if (this.cancelTrailing !== null) {
      this.cancelTrailing();
      this.cancelTrailing = null;
    }
    this.pending = null;
  }
}
