// Wire protocol v1 spoken by the session service: text frames, one JSON
// message each, every message tagged with {v: 1}.

export const PROTOCOL_VERSION = 1;

export interface GazePayload {
  u: number;
  v: number;
  valid: boolean;
}

export interface GazeMessage {
  v: typeof PROTOCOL_VERSION;
  type: "gaze";
  gaze: GazePayload;
}

export type ControlCommand = "reset" | "pause" | "resume" | "estop_clear" | "recalibrate";

export interface ControlMessage {
  v: typeof PROTOCOL_VERSION;
  type: "control";
  cmd: ControlCommand;
}

export interface ZoneState {
  id: string;
  quad: [number, number][];
  visible: boolean;
  a: number;
  active: boolean;
}

export interface StateMessage {
  v: number;
  type: "state";
  frame: number;
  t: number;
  paused: boolean;
  ee: [number, number, number];
  gripper: "open" | "closed";
  held: number | null;
  cubes: [number, number, number][];
  force: number;
  estop: boolean;
  score: number;
  recalibrations: number;
  velocity: [number, number, number];
  zones: ZoneState[];
  gaze: GazePayload | null;
  ee_px: [number, number] | null;
  sheet_px: [number, number][] | null;
  squares_px: ([number, number][] | null)[];
  cubes_px: ([number, number][] | null)[];
}

export interface HelloMessage {
  v: number;
  type: "hello";
  role: "controller" | "observer";
  scene: {
    image: [number, number];
    cube_edge: number;
    buttons: string[];
    max_score: number;
  };
}

export interface EventMessage {
  v: number;
  type: "event";
  kind: "input" | "score" | "estop";
  t: number;
  button?: string;
  edge?: "activated" | "deactivated";
  block?: number;
  points?: number;
  total?: number;
  engaged?: boolean;
}

export interface ErrorMessage {
  v: number;
  type: "error";
  message: string;
}

export type ServerMessage = HelloMessage | StateMessage | EventMessage | ErrorMessage;

export function gazeMessage(u: number, v: number, valid: boolean): GazeMessage {
  return { v: PROTOCOL_VERSION, type: "gaze", gaze: { u, v, valid } };
}

export function controlMessage(cmd: ControlCommand): ControlMessage {
  return { v: PROTOCOL_VERSION, type: "control", cmd };
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as { v?: unknown; type?: unknown };
  if (msg.v !== PROTOCOL_VERSION) return null;
  if (
    msg.type === "hello" ||
    msg.type === "state" ||
    msg.type === "event" ||
    msg.type === "error"
  ) {
    return data as ServerMessage;
  }
  return null;
}
