// The view model and its reducer. All navigation facts shown to the user
// come verbatim from server payloads; this module only arranges them.

import { haversineM } from "./geo.js";
import type {
  CommandKind,
  GuidanceMessage,
  NetworkGeometry,
  PlanPayload,
  RideEventPayload,
  WorldSnapshot,
} from "./types.js";

export interface FeedItem {
  t: number;
  severity: "info" | "alert";
  text: string;
  activity: string;
  // carried through untouched so the UI can badge values like stops_left
  payload: Record<string, unknown>;
}

export interface ViewModel {
  sessionId: string | null;
  network: NetworkGeometry | null;
  clock: number;
  paused: boolean;
  speed: number;
  snapshot: WorldSnapshot | null;
  plan: PlanPayload | null;
  feed: FeedItem[]; // newest first
  rideEvents: RideEventPayload[];
  dialogueOpen: boolean;
  awaitingDialogue: boolean; // response sent, waiting for the next snapshot
  pendingCommand: CommandKind | null;
  toast: string | null;
}

export function initialViewModel(): ViewModel {
  return {
    sessionId: null,
    network: null,
    clock: 0,
    paused: false,
    speed: 1,
    snapshot: null,
    plan: null,
    feed: [],
    rideEvents: [],
    dialogueOpen: false,
    awaitingDialogue: false,
    pendingCommand: null,
    toast: null,
  };
}

export type UiEvent =
  | { type: "session"; id: string }
  | { type: "network"; network: NetworkGeometry }
  | { type: "snapshot"; snapshot: WorldSnapshot }
  | { type: "message"; message: GuidanceMessage }
  | { type: "ride_event"; event: RideEventPayload }
  | { type: "plan"; plan: PlanPayload | null }
  | { type: "command_sent"; kind: CommandKind }
  | { type: "command_ack" }
  | { type: "command_error"; code: string; detail: string }
  | { type: "dialogue_responded"; choice: string }
  | { type: "toast"; text: string }
  | { type: "toast_cleared" };

const FEED_LIMIT = 200;

export function reduce(vm: ViewModel, event: UiEvent): ViewModel {
  switch (event.type) {
    case "session":
      return { ...initialViewModel(), network: vm.network, sessionId: event.id };
    case "network":
      return { ...vm, network: event.network };
    case "snapshot": {
      const snap = event.snapshot;
      const pending = snap.tracker?.pending_replan === true;
      return {
        ...vm,
        snapshot: snap,
        clock: snap.clock,
        paused: snap.paused,
        speed: snap.speed,
        plan: snap.plan,
        // the server is the single source of truth for the dialogue;
        // `awaitingDialogue` just hides it until the answer lands
        dialogueOpen: pending && !vm.awaitingDialogue,
        awaitingDialogue: pending ? vm.awaitingDialogue : false,
        pendingCommand: null,
      };
    }
    case "message": {
      const item: FeedItem = {
        t: event.message.t,
        severity: event.message.severity,
        text: event.message.text,
        activity: event.message.activity,
        payload: event.message.payload ?? {},
      };
      return { ...vm, feed: [item, ...vm.feed].slice(0, FEED_LIMIT) };
    }
    case "ride_event":
      return { ...vm, rideEvents: [...vm.rideEvents, event.event] };
    case "plan":
      return { ...vm, plan: event.plan };
    case "command_sent":
      return { ...vm, pendingCommand: event.kind };
    case "command_ack":
      return vm; // button re-enables on the next snapshot
    case "command_error":
      return {
        ...vm,
        pendingCommand: null,
        toast: `${event.code}: ${event.detail}`,
      };
    case "dialogue_responded":
      return { ...vm, dialogueOpen: false, awaitingDialogue: true };
    case "toast":
      return { ...vm, toast: event.text };
    case "toast_cleared":
      return { ...vm, toast: null };
  }
}

// --- derived state (always computed from the latest snapshot) ---------------

export const BOARD_RADIUS_M = 15;

export function boardableVehicles(vm: ViewModel): string[] {
  const snap = vm.snapshot;
  if (!snap || snap.passenger.mode === "onboard" || vm.pendingCommand) return [];
  return snap.vehicles
    .filter(
      (v) =>
        v.doors_open &&
        haversineM(snap.passenger.lat, snap.passenger.lon, v.lat, v.lon) <=
          BOARD_RADIUS_M,
    )
    .map((v) => v.vehicle);
}

export function canAlight(vm: ViewModel): boolean {
  const snap = vm.snapshot;
  if (!snap || snap.passenger.mode !== "onboard" || vm.pendingCommand) return false;
  const ride = snap.vehicles.find((v) => v.vehicle === snap.passenger.vehicle);
  return ride?.doors_open === true;
}

export function canWalk(vm: ViewModel): boolean {
  return vm.snapshot !== null &&
    vm.snapshot.passenger.mode !== "onboard" &&
    vm.pendingCommand === null;
}

export function deviationBadge(vm: ViewModel): string | null {
  const tracker = vm.snapshot?.tracker;
  if (!tracker || tracker.status !== "deviated") return null;
  return tracker.deviation ?? "deviated";
}

// Index of the plan segment to draw in the alert style, or null.
export function deviatedSegmentIndex(vm: ViewModel): number | null {
  const tracker = vm.snapshot?.tracker;
  if (!tracker || tracker.status !== "deviated" || !vm.plan) return null;
  return Math.min(tracker.segment_index, vm.plan.segments.length - 1);
}

export function stopsLeftBadge(item: FeedItem): number | null {
  const v = item.payload["stops_left"];
  return typeof v === "number" ? v : null;
}
