// SVG map: network geometry, live vehicles, the passenger, the plan overlay.
// Uses only the network's own shapes; no external tiles.

import { boundsOf, makeProjection, type Projection } from "./geo.js";
import { deviatedSegmentIndex, type ViewModel } from "./state.js";
import type { NetworkGeometry, PlanPayload } from "./types.js";

const LINE_COLORS = ["#2c7fb8", "#d95f0e", "#31a354", "#756bb1", "#c51b8a"];
const SVG_NS = "http://www.w3.org/2000/svg";

export class MapView {
  private proj: Projection | null = null;
  private stopsById = new Map<string, { lat: number; lon: number; name: string }>();
  private lineColor = new Map<string, string>();
  private onClick: ((lat: number, lon: number) => void) | null = null;

  constructor(private root: SVGSVGElement) {}

  clickToWalk(handler: (lat: number, lon: number) => void): void {
    this.onClick = handler;
  }

  setNetwork(net: NetworkGeometry): void {
    const pts: [number, number][] = net.stops.map((s) => [s.lat, s.lon]);
    for (const line of net.lines)
      for (const d of line.directions) pts.push(...d.shape);
    this.proj = makeProjection(boundsOf(pts), 720);
    this.stopsById.clear();
    for (const s of net.stops) this.stopsById.set(s.id, s);
    net.lines.forEach((l, i) =>
      this.lineColor.set(l.id, LINE_COLORS[i % LINE_COLORS.length]));
    this.root.setAttribute("viewBox", `0 0 ${this.proj.width} ${this.proj.height}`);
    this.root.addEventListener("click", (ev) => {
      if (!this.onClick || !this.proj) return;
      const rect = this.root.getBoundingClientRect();
      const sx = ((ev.clientX - rect.left) / rect.width) * this.proj.width;
      const sy = ((ev.clientY - rect.top) / rect.height) * this.proj.height;
      const { lat, lon } = this.unproject(sx, sy);
      this.onClick(lat, lon);
    });
    this.renderBase(net);
  }

  private unproject(x: number, y: number): { lat: number; lon: number } {
    // invert by linear interpolation against two reference points
    const p = this.proj!;
    const stops = [...this.stopsById.values()];
    const a = stops[0];
    const ax = p.x(a.lon), ay = p.y(a.lat);
    let b = stops[stops.length - 1];
    for (const s of stops)
      if (Math.abs(p.x(s.lon) - ax) > 1 && Math.abs(p.y(s.lat) - ay) > 1) { b = s; break; }
    const bx = p.x(b.lon), by = p.y(b.lat);
    const lon = a.lon + ((x - ax) / (bx - ax || 1)) * (b.lon - a.lon);
    const lat = a.lat + ((y - ay) / (by - ay || 1)) * (b.lat - a.lat);
    return { lat, lon };
  }

  private el(tag: string, attrs: Record<string, string | number>): Element {
    const node = document.createElementNS(SVG_NS, tag);
    for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
    return node;
  }

  private path(points: [number, number][]): string {
    const p = this.proj!;
    return points
      .map(([lat, lon], i) => `${i ? "L" : "M"}${p.x(lon).toFixed(1)},${p.y(lat).toFixed(1)}`)
      .join(" ");
  }

  private layer(id: string): Element {
    let g = this.root.querySelector(`#${id}`);
    if (!g) {
      g = this.el("g", { id });
      this.root.appendChild(g);
    }
    g.replaceChildren();
    return g;
  }

  private renderBase(net: NetworkGeometry): void {
    const g = this.layer("layer-network");
    for (const line of net.lines) {
      const color = this.lineColor.get(line.id)!;
      for (const d of line.directions) {
        g.appendChild(this.el("path", {
          d: this.path(d.shape), stroke: color, "stroke-width": 2.5,
          fill: "none", opacity: 0.35,
        }));
      }
    }
    for (const s of net.stops) {
      const x = this.proj!.x(s.lon), y = this.proj!.y(s.lat);
      g.appendChild(this.el("circle", {
        cx: x, cy: y, r: 4, fill: "#fff", stroke: "#555", "stroke-width": 1.5,
      }));
      const label = this.el("text", {
        x: x + 6, y: y - 6, "font-size": 10, fill: "#444",
      });
      label.textContent = s.name;
      g.appendChild(label);
    }
  }

  renderPlan(plan: PlanPayload | null, deviatedIndex: number | null): void {
    const g = this.layer("layer-plan");
    if (!plan || !this.proj) return;
    plan.segments.forEach((seg, i) => {
      const alert = i === deviatedIndex;
      if (seg.kind === "walk") {
        g.appendChild(this.el("path", {
          d: this.path(seg.path),
          stroke: alert ? "#d62728" : "#111",
          "stroke-width": 2.5, "stroke-dasharray": "6 5", fill: "none",
        }));
      } else {
        const a = this.stopsById.get(seg.board_stop);
        const b = this.stopsById.get(seg.alight_stop);
        if (!a || !b) return;
        g.appendChild(this.el("path", {
          d: this.path([[a.lat, a.lon], [b.lat, b.lon]]),
          stroke: alert ? "#d62728" : this.lineColor.get(seg.line) ?? "#333",
          "stroke-width": 5, fill: "none", opacity: 0.85,
        }));
      }
    });
    const [dlat, dlon] = plan.destination;
    g.appendChild(this.el("circle", {
      cx: this.proj.x(dlon), cy: this.proj.y(dlat), r: 6,
      fill: "none", stroke: "#111", "stroke-width": 2,
    }));
  }

  renderDynamic(vm: ViewModel): void {
    const g = this.layer("layer-dynamic");
    const snap = vm.snapshot;
    if (!snap || !this.proj) return;
    for (const v of snap.vehicles) {
      const x = this.proj.x(v.lon), y = this.proj.y(v.lat);
      const wrong = vm.snapshot?.tracker?.deviation === "wrong_bus" &&
        snap.passenger.vehicle === v.vehicle;
      g.appendChild(this.el("rect", {
        x: x - 6, y: y - 4, width: 12, height: 8, rx: 2,
        fill: wrong ? "#d62728" : this.lineColor.get(v.line) ?? "#333",
        stroke: v.doors_open ? "#ffd400" : "#222", "stroke-width": 2,
      }));
      const label = this.el("text", { x: x + 8, y: y + 4, "font-size": 9, fill: "#222" });
      label.textContent = v.vehicle;
      g.appendChild(label);
    }
    const p = snap.passenger;
    g.appendChild(this.el("circle", {
      cx: this.proj.x(p.lon), cy: this.proj.y(p.lat), r: 5,
      fill: p.mode === "onboard" ? "#ffd400" : "#e31a1c",
      stroke: "#000", "stroke-width": 1.5,
    }));
    this.renderPlan(vm.plan, deviatedSegmentIndex(vm));
  }
}
