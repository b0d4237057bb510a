// Bootstrap: one session, one event stream, one render loop.

import { ApiError, Client } from "./api.js";
import { ControlsView } from "./controls.js";
import { FeedView } from "./feed.js";
import { MapView } from "./mapview.js";
import {
  initialViewModel, reduce, type UiEvent, type ViewModel,
} from "./state.js";
import type { GuidanceMessage, RideEventPayload, WorldSnapshot } from "./types.js";

const client = new Client("");
let vm: ViewModel = initialViewModel();
let stream: EventSource | null = null;

const mapView = new MapView(
  document.querySelector<SVGSVGElement>("#map")!,
);
const feedView = new FeedView(
  document.querySelector("#feed")!,
  document.querySelector("#dialogue")!,
  document.querySelector("#toast")!,
  (choice) => {
    if (!vm.sessionId) return;
    dispatch({ type: "dialogue_responded", choice });
    client.respond(vm.sessionId, choice).catch(showError);
  },
);
const controls = new ControlsView(document.querySelector("#controls")!, {
  wait: () => sendCommand("wait"),
  board: (vehicle) => sendCommand("board", { vehicle }),
  alight: () => sendCommand("alight"),
  pause: () => vm.sessionId && client.clock(vm.sessionId, "pause").catch(showError),
  resume: () => vm.sessionId && client.clock(vm.sessionId, "resume").catch(showError),
  setSpeed: (speed) =>
    vm.sessionId && client.clock(vm.sessionId, "set_speed", speed).catch(showError),
});

function dispatch(event: UiEvent): void {
  vm = reduce(vm, event);
  feedView.render(vm);
  controls.render(vm);
  mapView.renderDynamic(vm);
}

function showError(err: unknown): void {
  const text = err instanceof ApiError ? `${err.code}: ${err.detail}` : String(err);
  dispatch({ type: "toast", text });
  setTimeout(() => dispatch({ type: "toast_cleared" }), 4000);
}

function sendCommand(kind: "wait" | "board" | "alight" | "walk_toward",
                     args: { lat?: number; lon?: number; vehicle?: string } = {}): void {
  if (!vm.sessionId) return;
  dispatch({ type: "command_sent", kind });
  client.command(vm.sessionId, kind, args)
    .then(() => dispatch({ type: "command_ack" }))
    .catch((err) => {
      if (err instanceof ApiError) {
        dispatch({ type: "command_error", code: err.code, detail: err.detail });
        setTimeout(() => dispatch({ type: "toast_cleared" }), 4000);
      } else showError(err);
    });
}

function connectStream(sid: string): void {
  stream?.close();
  stream = client.openEvents(sid, {
    snapshot: (s: WorldSnapshot) => dispatch({ type: "snapshot", snapshot: s }),
    message: (m) => dispatch({ type: "message", message: m as GuidanceMessage }),
    rideEvent: (e) =>
      dispatch({ type: "ride_event", event: e as RideEventPayload }),
    dropped: () => {
      // EventSource reconnects on its own; refresh state when it does
      client.snapshot(sid)
        .then((s) => dispatch({ type: "snapshot", snapshot: s }))
        .catch(() => undefined);
    },
  });
}

async function start(): Promise<void> {
  const net = await client.network();
  dispatch({ type: "network", network: net });
  mapView.setNetwork(net);

  const first = net.stops[0];
  const info = await client.createSession(
    { lat: first.lat, lon: first.lon }, Math.floor(Math.random() * 10_000), 5);
  dispatch({ type: "session", id: info.session_id });
  connectStream(info.session_id);

  mapView.clickToWalk((lat, lon) => {
    const mode = document.querySelector<HTMLInputElement>("#click-mode")!;
    if (mode.checked) {
      if (!vm.sessionId) return;
      client.plan(vm.sessionId, { lat, lon })
        .then((resp) => {
          if (resp.no_route) showError(new ApiError("no_route", "destination unreachable"));
          else {
            dispatch({ type: "plan", plan: resp.plan });
            return client.track(vm.sessionId!);
          }
        })
        .catch(showError);
    } else {
      sendCommand("walk_toward", { lat, lon });
    }
  });
}

start().catch(showError);
