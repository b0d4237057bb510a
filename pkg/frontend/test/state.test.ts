// UI contract tests: the view model is driven only by server payloads and
// never re-derives navigation facts. The stream below mirrors the
// wrong-bus session flow as the service emits it (same field names the
// backend test suite asserts on the wire).

import { describe, expect, it } from "vitest";

import {
  boardableVehicles,
  canAlight,
  canWalk,
  deviatedSegmentIndex,
  deviationBadge,
  initialViewModel,
  reduce,
  stopsLeftBadge,
  type ViewModel,
} from "../src/state.js";
import type {
  GuidanceMessage,
  PlanPayload,
  WorldSnapshot,
} from "../src/types.js";

const PLAN_A: PlanPayload = {
  origin: [40.75288, -73.98863],
  destination: [40.75099, -73.9862],
  departure: 0,
  arrival: 213.7,
  segments: [
    { kind: "walk", length_m: 45.0, duration_s: 37.5,
      path: [[40.75288, -73.98863], [40.75288, -73.9881]] },
    { kind: "bus", line: "L1", direction: 0, vehicle: "bus-101",
      board_stop: "s_b", alight_stop: "s_d", board_time: 136,
      alight_time: 172, intermediate_stops: 1 },
    { kind: "walk", length_m: 50.0, duration_s: 41.7,
      path: [[40.75144, -73.9862], [40.75099, -73.9862]] },
  ],
};

const PLAN_B: PlanPayload = {
  origin: [40.75144, -73.9881],
  destination: [40.75099, -73.9862],
  departure: 105,
  arrival: 244.7,
  segments: [
    { kind: "walk", length_m: 167.6, duration_s: 139.7,
      path: [[40.75144, -73.9881], [40.75099, -73.9862]] },
  ],
};

function snap(over: Partial<WorldSnapshot>): WorldSnapshot {
  return {
    clock: 0, paused: false, speed: 5,
    passenger: { lat: 40.75288, lon: -73.98863, mode: "waiting", vehicle: null },
    vehicles: [],
    tracker: null,
    plan: null,
    ...over,
  };
}

function msg(over: Partial<GuidanceMessage>): GuidanceMessage {
  return { t: 0, activity: "riding_bus", severity: "info", text: "",
           payload: {}, ...over };
}

function run(events: Parameters<typeof reduce>[1][]): ViewModel {
  return events.reduce(reduce, initialViewModel());
}

describe("guidance feed", () => {
  it("renders stops_left verbatim from the payload", () => {
    const vm = run([
      { type: "message", message: msg({
        t: 100, text: "You are on the correct bus (line L1 direction 0). 3 stops until Mill & East.",
        payload: { stops_left: 3, line_id: "L1" } }) },
      { type: "message", message: msg({
        t: 137, text: "2 stops left. Next stop: Alder & East.",
        payload: { stops_left: 2, next_stop: "s_c" } }) },
    ]);
    expect(vm.feed).toHaveLength(2);
    // newest first; badge values come straight from the payload
    expect(stopsLeftBadge(vm.feed[0])).toBe(2);
    expect(stopsLeftBadge(vm.feed[1])).toBe(3);
    expect(vm.feed[0].text).toContain("2 stops left");
  });

  it("keeps alerts distinct and ordered newest first", () => {
    const vm = run([
      { type: "message", message: msg({ t: 1, text: "a" }) },
      { type: "message", message: msg({ t: 2, text: "b", severity: "alert" }) },
    ]);
    expect(vm.feed.map((f) => f.text)).toEqual(["b", "a"]);
    expect(vm.feed[0].severity).toBe("alert");
  });
});

describe("wrong-bus flow: dialogue and overlay", () => {
  const boardedWrong = snap({
    clock: 61,
    passenger: { lat: 40.75288, lon: -73.9881, mode: "onboard", vehicle: "bus-201" },
    vehicles: [{ vehicle: "bus-201", line: "L2", direction: 0,
                 lat: 40.75288, lon: -73.9881, doors_open: true, next_stop: "s_b" }],
    tracker: { activity: "riding_bus", status: "deviated", segment_index: 1,
               stops_left: null, deviation: "wrong_bus", pending_replan: true },
    plan: PLAN_A,
  });

  it("opens exactly one dialogue while a prompt is pending", () => {
    let vm = run([
      { type: "plan", plan: PLAN_A },
      { type: "message", message: msg({
        t: 60, severity: "alert",
        text: "You boarded the wrong bus: line L2 direction 0 (planned: line L1 direction 0).",
        payload: { observed_line: "L2" } }) },
      { type: "snapshot", snapshot: boardedWrong },
      { type: "snapshot", snapshot: boardedWrong },   // repeated pushes
    ]);
    expect(vm.dialogueOpen).toBe(true);
    expect(deviationBadge(vm)).toBe("wrong_bus");
    expect(deviatedSegmentIndex(vm)).toBe(1);          // the bus leg turns red
  });

  it("closes optimistically on respond and stays closed until the server clears it", () => {
    let vm = run([{ type: "snapshot", snapshot: boardedWrong }]);
    vm = reduce(vm, { type: "dialogue_responded", choice: "confirm" });
    expect(vm.dialogueOpen).toBe(false);
    // a stale snapshot still carrying the pending flag must not reopen it
    vm = reduce(vm, { type: "snapshot", snapshot: boardedWrong });
    expect(vm.dialogueOpen).toBe(false);
    // confirmation lands: new plan, no pending prompt, overlay replaced
    const confirmed = snap({
      clock: 106,
      passenger: { lat: 40.75144, lon: -73.9881, mode: "waiting", vehicle: null },
      tracker: { activity: "walking_to_destination", status: "on_track",
                 segment_index: 0, stops_left: null, deviation: null,
                 pending_replan: false },
      plan: PLAN_B,
    });
    vm = reduce(vm, { type: "snapshot", snapshot: confirmed });
    expect(vm.dialogueOpen).toBe(false);
    expect(vm.awaitingDialogue).toBe(false);
    expect(vm.plan).toEqual(PLAN_B);                  // overlay replaced
    expect(deviationBadge(vm)).toBeNull();
  });

  it("refuse dismisses the dialogue but the deviated badge persists", () => {
    let vm = run([{ type: "snapshot", snapshot: boardedWrong }]);
    vm = reduce(vm, { type: "dialogue_responded", choice: "refuse" });
    const refused = snap({
      ...boardedWrong,
      tracker: { ...boardedWrong.tracker!, pending_replan: false },
    });
    vm = reduce(vm, { type: "snapshot", snapshot: refused });
    expect(vm.dialogueOpen).toBe(false);
    expect(deviationBadge(vm)).toBe("wrong_bus");     // still deviated
  });
});

describe("command enablement mirrors the snapshot", () => {
  const dwellingNearby = snap({
    passenger: { lat: 40.75288, lon: -73.9881, mode: "waiting", vehicle: null },
    vehicles: [
      { vehicle: "bus-201", line: "L2", direction: 0,
        lat: 40.75288, lon: -73.9881, doors_open: true, next_stop: "s_b" },
      { vehicle: "bus-101", line: "L1", direction: 0,
        lat: 40.75288, lon: -73.99, doors_open: true, next_stop: "s_a" },
    ],
  });

  it("board is offered only for dwelling vehicles within reach", () => {
    const vm = run([{ type: "snapshot", snapshot: dwellingNearby }]);
    expect(boardableVehicles(vm)).toEqual(["bus-201"]); // bus-101 is 160 m away
  });

  it("closed doors disable boarding", () => {
    const closed = snap({
      ...dwellingNearby,
      vehicles: dwellingNearby.vehicles.map((v) => ({ ...v, doors_open: false })),
    });
    const vm = run([{ type: "snapshot", snapshot: closed }]);
    expect(boardableVehicles(vm)).toEqual([]);
  });

  it("alight needs to be on board with open doors", () => {
    const onboard = snap({
      passenger: { lat: 40.75288, lon: -73.9881, mode: "onboard", vehicle: "bus-201" },
      vehicles: [{ vehicle: "bus-201", line: "L2", direction: 0,
                   lat: 40.75288, lon: -73.9881, doors_open: true, next_stop: "s_e" }],
    });
    const vm = run([{ type: "snapshot", snapshot: onboard }]);
    expect(canAlight(vm)).toBe(true);
    expect(canWalk(vm)).toBe(false);
    const moving = snap({
      ...onboard,
      vehicles: [{ ...onboard.vehicles[0], doors_open: false }],
    });
    expect(canAlight(reduce(vm, { type: "snapshot", snapshot: moving }))).toBe(false);
  });

  it("a sent command disables further commands until the next snapshot", () => {
    let vm = run([{ type: "snapshot", snapshot: dwellingNearby }]);
    vm = reduce(vm, { type: "command_sent", kind: "board" });
    expect(boardableVehicles(vm)).toEqual([]);
    vm = reduce(vm, { type: "snapshot", snapshot: dwellingNearby });
    expect(boardableVehicles(vm)).toEqual(["bus-201"]);
  });

  it("a protocol error surfaces as a toast and re-enables commands", () => {
    let vm = run([{ type: "snapshot", snapshot: dwellingNearby }]);
    vm = reduce(vm, { type: "command_sent", kind: "board" });
    vm = reduce(vm, { type: "command_error", code: "doors_closed",
                      detail: "doors closed" });
    expect(vm.toast).toBe("doors_closed: doors closed");
    expect(vm.pendingCommand).toBeNull();
  });
});
