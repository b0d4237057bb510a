// Steering buttons and the clock control. Enablement always reflects the
// latest world snapshot.

import {
  boardableVehicles, canAlight, canWalk, deviationBadge, type ViewModel,
} from "./state.js";
import { fmtClock } from "./feed.js";

export interface ControlHandlers {
  wait(): void;
  board(vehicle: string): void;
  alight(): void;
  pause(): void;
  resume(): void;
  setSpeed(speed: number): void;
}

export class ControlsView {
  private waitBtn = document.createElement("button");
  private alightBtn = document.createElement("button");
  private boardBox = document.createElement("span");
  private pauseBtn = document.createElement("button");
  private speedSel = document.createElement("select");
  private clockEl = document.createElement("span");
  private statusEl = document.createElement("span");

  constructor(root: HTMLElement, private handlers: ControlHandlers) {
    this.clockEl.className = "clock";
    this.statusEl.className = "status";
    this.waitBtn.textContent = "wait";
    this.waitBtn.addEventListener("click", () => handlers.wait());
    this.alightBtn.textContent = "alight";
    this.alightBtn.addEventListener("click", () => handlers.alight());
    this.pauseBtn.addEventListener("click", () => {
      if (this.pauseBtn.dataset.state === "paused") handlers.resume();
      else handlers.pause();
    });
    for (const s of [1, 2, 5, 10, 20]) {
      const opt = document.createElement("option");
      opt.value = String(s);
      opt.textContent = `${s}x`;
      this.speedSel.appendChild(opt);
    }
    this.speedSel.addEventListener("change", () =>
      handlers.setSpeed(Number(this.speedSel.value)));
    root.append(this.clockEl, this.pauseBtn, this.speedSel,
                this.waitBtn, this.boardBox, this.alightBtn, this.statusEl);
  }

  render(vm: ViewModel): void {
    this.clockEl.textContent = fmtClock(vm.clock);
    this.pauseBtn.textContent = vm.paused ? "resume" : "pause";
    this.pauseBtn.dataset.state = vm.paused ? "paused" : "running";
    this.speedSel.value = String(vm.speed);
    this.waitBtn.disabled = !canWalk(vm);
    this.alightBtn.disabled = !canAlight(vm);
    this.boardBox.replaceChildren(
      ...boardableVehicles(vm).map((vehicle) => {
        const btn = document.createElement("button");
        btn.textContent = `board ${vehicle}`;
        btn.dataset.vehicle = vehicle;
        btn.addEventListener("click", () => this.handlers.board(vehicle));
        return btn;
      }),
    );
    const badge = deviationBadge(vm);
    const mode = vm.snapshot?.passenger.mode ?? "-";
    const activity = vm.snapshot?.tracker?.activity ?? "idle";
    this.statusEl.textContent = badge
      ? `${mode} | ${activity} | DEVIATED: ${badge}`
      : `${mode} | ${activity}`;
    this.statusEl.classList.toggle("deviated", badge !== null);
  }
}
