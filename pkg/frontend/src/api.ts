// Thin protocol client: JSON requests plus one server-sent event stream.

import type {
  CommandKind,
  NetworkGeometry,
  PlanPayload,
  ProtocolError,
  ReplanChoice,
  WorldSnapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(public code: string, public detail: string) {
    super(`${code}: ${detail}`);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!res.ok) {
    let err: ProtocolError = { code: `http_${res.status}`, detail: res.statusText };
    try {
      const body = await res.json();
      if (body.code) err = body;
      else if (body.detail) err = { code: `http_${res.status}`, detail: JSON.stringify(body.detail) };
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(err.code, err.detail);
  }
  return (await res.json()) as T;
}

export interface SessionInfo {
  session_id: string;
  mode: string;
  clock: number;
  speed: number;
  paused: boolean;
}

export class Client {
  constructor(private base = "") {}

  network(): Promise<NetworkGeometry> {
    return request(`${this.base}/network`);
  }

  createSession(start: { lat: number; lon: number }, seed: number,
                speed: number): Promise<SessionInfo> {
    return request(`${this.base}/sessions`, {
      method: "POST",
      body: JSON.stringify({ mode: "interactive", seed, speed, start }),
    });
  }

  snapshot(sid: string): Promise<WorldSnapshot> {
    return request(`${this.base}/sessions/${sid}`);
  }

  plan(sid: string, destination: { lat: number; lon: number }):
      Promise<{ no_route: boolean; plan: PlanPayload | null }> {
    return request(`${this.base}/sessions/${sid}/plan`, {
      method: "POST",
      body: JSON.stringify({ destination }),
    });
  }

  track(sid: string): Promise<unknown> {
    return request(`${this.base}/sessions/${sid}/track`, { method: "POST" });
  }

  command(sid: string, kind: CommandKind,
          args: { lat?: number; lon?: number; vehicle?: string } = {}):
      Promise<unknown> {
    return request(`${this.base}/sessions/${sid}/command`, {
      method: "POST",
      body: JSON.stringify({ kind, ...args }),
    });
  }

  respond(sid: string, choice: ReplanChoice, delay_s = 60): Promise<unknown> {
    return request(`${this.base}/sessions/${sid}/replan-response`, {
      method: "POST",
      body: JSON.stringify({ choice, delay_s }),
    });
  }

  clock(sid: string, action: "pause" | "resume" | "set_speed",
        speed?: number): Promise<unknown> {
    return request(`${this.base}/sessions/${sid}/clock`, {
      method: "POST",
      body: JSON.stringify({ action, speed }),
    });
  }

  // The stream is the sole live source of truth; handlers receive parsed data.
  openEvents(sid: string, handlers: {
    snapshot(s: WorldSnapshot): void;
    message(m: unknown): void;
    rideEvent(e: unknown): void;
    dropped(): void;
  }): EventSource {
    const es = new EventSource(`${this.base}/sessions/${sid}/events`);
    es.addEventListener("snapshot", (ev) =>
      handlers.snapshot(JSON.parse((ev as MessageEvent).data)));
    es.addEventListener("message", (ev) =>
      handlers.message(JSON.parse((ev as MessageEvent).data)));
    es.addEventListener("ride_event", (ev) =>
      handlers.rideEvent(JSON.parse((ev as MessageEvent).data)));
    es.onerror = () => handlers.dropped();
    return es;
  }
}
