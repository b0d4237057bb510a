"""Offline replay: run ride detection over a recorded trace.

Feeds every scan record through the detector and, when the trace carries
ground-truth board/alight marks, scores detection timing and counts false
positives and negatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .detection import RideDetectorState, RideEvent, detect_step
from .network import TransitNetwork
from .trace import TraceRecord, scan_from_payload


@dataclass
class ReplayReport:
    events: list[RideEvent]
    truth: list[tuple[float, str, str]]            # (t, board|alight, vehicle)
    matches: list[tuple[str, float, float]]        # (kind, truth_t, detected_t)
    false_positives: int = 0
    false_negatives: int = 0

    def summary_lines(self) -> list[str]:
        lines = [f"ride events detected: {len(self.events)}"]
        if self.truth:
            for kind, tt, dt in self.matches:
                lines.append(f"  {kind}: truth t={tt:.0f} detected t={dt:.0f} "
                             f"(error {dt - tt:+.0f} s)")
            lines.append(f"false positives: {self.false_positives}")
            lines.append(f"false negatives: {self.false_negatives}")
        return lines


def replay_trace(records: list[TraceRecord], net: TransitNetwork) -> ReplayReport:
    state = RideDetectorState.initial()
    events: list[RideEvent] = []
    truth: list[tuple[float, str, str]] = []
    for rec in records:
        if rec.kind == "scan":
            state, evs = detect_step(state, scan_from_payload(rec.t, rec.payload), net)
            events.extend(evs)
        elif rec.kind == "ground_truth":
            ev = rec.payload.get("event")
            if ev in ("board", "alight"):
                truth.append((rec.t, ev, rec.payload.get("vehicle", "")))

    matches: list[tuple[str, float, float]] = []
    unmatched = list(events)
    fn = 0
    for tt, kind, vehicle in truth:
        want = "boarded" if kind == "board" else "alighted"
        best = None
        for ev in unmatched:
            if ev.kind.value != want or (vehicle and ev.vehicle_id != vehicle):
                continue
            if best is None or abs(ev.timestamp - tt) < abs(best.timestamp - tt):
                best = ev
        if best is None:
            fn += 1
        else:
            unmatched.remove(best)
            matches.append((kind, tt, best.timestamp))
    return ReplayReport(events=events, truth=truth, matches=matches,
                        false_positives=len(unmatched) if truth else 0,
                        false_negatives=fn)
