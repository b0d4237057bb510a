// Guidance feed (newest on top), the re-plan dialogue, and toasts.

import { stopsLeftBadge, type ViewModel } from "./state.js";
import type { ReplanChoice } from "./types.js";

export class FeedView {
  constructor(
    private feedEl: HTMLElement,
    private dialogueEl: HTMLElement,
    private toastEl: HTMLElement,
    private onRespond: (choice: ReplanChoice) => void,
  ) {
    for (const choice of ["confirm", "delay", "refuse"] as const) {
      const btn = document.createElement("button");
      btn.textContent = choice;
      btn.dataset.choice = choice;
      btn.addEventListener("click", () => this.onRespond(choice));
      this.dialogueEl.appendChild(btn);
    }
  }

  render(vm: ViewModel): void {
    this.feedEl.replaceChildren(
      ...vm.feed.map((item) => {
        const li = document.createElement("li");
        li.className = item.severity === "alert" ? "msg alert" : "msg info";
        const time = document.createElement("span");
        time.className = "t";
        time.textContent = fmtClock(item.t);
        li.appendChild(time);
        const text = document.createElement("span");
        text.textContent = item.text;
        li.appendChild(text);
        const stopsLeft = stopsLeftBadge(item);
        if (stopsLeft !== null) {
          const badge = document.createElement("span");
          badge.className = "badge";
          badge.dataset.stopsLeft = String(stopsLeft);
          badge.textContent = `${stopsLeft} stops left`;
          li.appendChild(badge);
        }
        return li;
      }),
    );
    this.dialogueEl.classList.toggle("open", vm.dialogueOpen);
    this.toastEl.textContent = vm.toast ?? "";
    this.toastEl.classList.toggle("open", vm.toast !== null);
  }
}

export function fmtClock(t: number): string {
  const s = Math.round(t);
  const hh = String(Math.floor(s / 3600)).padStart(2, "0");
  const mm = String(Math.floor((s % 3600) / 60)).padStart(2, "0");
  const ss = String(s % 60).padStart(2, "0");
  return `${hh}:${mm}:${ss}`;
}
