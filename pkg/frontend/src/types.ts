// Wire types for the session service. Field names mirror the server exactly;
// the client never re-derives navigation facts from geometry.

export interface StopGeometry {
  id: string;
  name: string;
  lat: number;
  lon: number;
}

export interface DirectionGeometry {
  direction: number;
  stops: string[];
  shape: [number, number][];
}

export interface LineGeometry {
  id: string;
  directions: DirectionGeometry[];
}

export interface NetworkGeometry {
  bus_ssid: string;
  stops: StopGeometry[];
  lines: LineGeometry[];
  vehicle_runs: unknown[];
}

export interface PassengerSnapshot {
  lat: number;
  lon: number;
  mode: "waiting" | "walking" | "onboard";
  vehicle: string | null;
}

export interface VehicleSnapshot {
  vehicle: string;
  line: string;
  direction: number;
  lat: number;
  lon: number;
  doors_open: boolean;
  next_stop: string | null;
}

export interface TrackerSnapshot {
  activity: string;
  status: "on_track" | "deviated" | "arrived";
  segment_index: number;
  stops_left: number | null;
  deviation: string | null;
  pending_replan: boolean;
}

export interface WalkSegmentPayload {
  kind: "walk";
  length_m: number;
  duration_s: number;
  path: [number, number][];
}

export interface BusSegmentPayload {
  kind: "bus";
  line: string;
  direction: number;
  vehicle: string;
  board_stop: string;
  alight_stop: string;
  board_time: number;
  alight_time: number;
  intermediate_stops: number;
}

export type SegmentPayload = WalkSegmentPayload | BusSegmentPayload;

export interface PlanPayload {
  origin: [number, number];
  destination: [number, number];
  departure: number;
  arrival: number;
  segments: SegmentPayload[];
}

export interface WorldSnapshot {
  clock: number;
  paused: boolean;
  speed: number;
  passenger: PassengerSnapshot;
  vehicles: VehicleSnapshot[];
  tracker: TrackerSnapshot | null;
  plan: PlanPayload | null;
}

export interface GuidanceMessage {
  t: number;
  activity: string;
  severity: "info" | "alert";
  text: string;
  payload: Record<string, unknown>;
}

export interface RideEventPayload {
  t: number;
  event: "boarded" | "alighted";
  vehicle: string;
  line: string;
  direction: number;
}

export type CommandKind = "walk_toward" | "wait" | "board" | "alight";
export type ReplanChoice = "confirm" | "delay" | "refuse";

export interface ProtocolError {
  code: string;
  detail: string;
}
