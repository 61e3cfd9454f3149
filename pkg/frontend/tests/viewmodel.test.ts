import { describe, expect, it } from "vitest";

import { parseServerMessage } from "../src/protocol.js";
import {
  FEED_LIMIT,
  initialViewModel,
  isStale,
  reduce,
  setConnection,
} from "../src/viewmodel.js";
import type { EventMessage, HelloMessage, StateMessage } from "../src/protocol.js";

const hello: HelloMessage = {
  v: 1,
  type: "hello",
  role: "controller",
  scene: { image: [1920, 1080], cube_edge: 0.02, buttons: ["move_left"], max_score: 16 },
};

function stateMsg(frame: number): StateMessage {
  return {
    v: 1,
    type: "state",
    frame,
    t: frame * 20,
    paused: false,
    ee: [0, 0, 0.16],
    gripper: "open",
    held: null,
    cubes: [],
    force: 0,
    estop: false,
    score: 0,
    recalibrations: 0,
    velocity: [0, 0, 0],
    zones: [],
    gaze: null,
    ee_px: [960, 540],
    sheet_px: null,
    squares_px: [],
    cubes_px: [],
  };
}

describe("protocol parsing", () => {
  it("accepts known message types with the right version", () => {
    expect(parseServerMessage(JSON.stringify(hello))?.type).toBe("hello");
  });

  it("rejects garbage, wrong versions and unknown types", () => {
    expect(parseServerMessage("not json")).toBeNull();
    expect(parseServerMessage('{"v":2,"type":"state"}')).toBeNull();
    expect(parseServerMessage('{"v":1,"type":"mystery"}')).toBeNull();
    expect(parseServerMessage("42")).toBeNull();
  });
});

describe("viewmodel reducer", () => {
  it("hello sets role and scene", () => {
    const vm = reduce(initialViewModel(), hello, 0);
    expect(vm.role).toBe("controller");
    expect(vm.scene?.max_score).toBe(16);
  });

  it("state frames must move forward", () => {
    let vm = reduce(initialViewModel(), stateMsg(10), 100);
    vm = reduce(vm, stateMsg(9), 200); // late frame ignored
    expect(vm.state?.frame).toBe(10);
    expect(vm.lastStateAt).toBe(100);
    vm = reduce(vm, stateMsg(11), 300);
    expect(vm.state?.frame).toBe(11);
  });

  it("event feed is newest-first and bounded", () => {
    let vm = initialViewModel();
    for (let k = 0; k < FEED_LIMIT + 10; k++) {
      const ev: EventMessage = { v: 1, type: "event", kind: "input", t: k, button: "b", edge: "activated" };
      vm = reduce(vm, ev, k);
    }
    expect(vm.feed).toHaveLength(FEED_LIMIT);
    expect(vm.feed[0].t).toBe(FEED_LIMIT + 9);
  });

  it("errors are surfaced and cleared by the next hello", () => {
    let vm = reduce(initialViewModel(), { v: 1, type: "error", message: "read-only client" }, 0);
    expect(vm.lastError).toBe("read-only client");
    vm = reduce(vm, hello, 0);
    expect(vm.lastError).toBeNull();
  });

  it("disconnect drops the role until re-granted", () => {
    let vm = reduce(initialViewModel(), hello, 0);
    vm = setConnection(vm, "closed");
    expect(vm.role).toBeNull();
    vm = setConnection(vm, "open");
    expect(vm.role).toBeNull(); // only a fresh hello restores it
  });

  it("staleness is judged from the last state wall time", () => {
    const vm = reduce(initialViewModel(), stateMsg(1), 1000);
    expect(isStale(vm, 1100)).toBe(false);
    expect(isStale(vm, 2000)).toBe(true);
    expect(isStale(initialViewModel(), 0)).toBe(true);
  });
});
