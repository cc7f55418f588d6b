#!/usr/bin/env python3
"""Regenerates the bundled scenario suites in data/scenarios/."""

import json
import math
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "scenarios"
CENTER = (4.25, 2.3)
WALK_SPEED = 0.5  # m/s

ZONE_CENTERS = {1: (1.26, 1.35), 2: (7.24, 1.35), 3: (1.26, 3.25), 4: (7.24, 3.25)}


def walk(points, start_t, speed=WALK_SPEED, dwell=None):
    """Waypoints visiting `points` in order, dwelling `dwell[i]` seconds at each."""
    out = []
    t = start_t
    x, y = points[0]
    out.append({"t": round(t, 3), "x": x, "y": y})
    for i, (nx, ny) in enumerate(points[1:], start=1):
        t += math.hypot(nx - x, ny - y) / speed
        out.append({"t": round(t, 3), "x": nx, "y": ny})
        x, y = nx, ny
        if dwell and dwell[i]:
            t += dwell[i]
            out.append({"t": round(t, 3), "x": x, "y": y})
    return out


def table6():
    movement_rule = {
        "id": "lack-of-movement-reminder",
        "name": "Lack of movement (caregiver)",
        "category": "reminder",
        "origin": "caregiver",
        "if": [{"var": "movement", "is": "high", "not": True}],
        "then": [{"var": "voice", "is": "13"}],
    }
    runs = []
    for zone, score, hours in [(1, 55, 1.15), (2, 48, 5.30), (3, 97, 5.25), (4, 76, 3.40)]:
        runs.append({
            "name": f"table6-run{zone}",
            "initialMovementHours": hours,
            "trajectory": walk([CENTER, ZONE_CENTERS[zone]], 10.0),
            "events": [{"t": 0, "kind": "gameScore", "score100": score}],
        })
    return {
        "name": "table6",
        "description": "Forbidden-zone experiment: one walk into each danger zone at 16:00.",
        "defaults": {
            "durationSeconds": 60,
            "seed": 7,
            "startHour": 16.0,
            "rangeNoise": 0.1,
            "lossProbability": 0.0,
            "devices": "default",
            "ruleEdits": [{"op": "disable", "id": "R7"}],
            "ruleExtensions": {"rules": [movement_rule]},
        },
        "runs": runs,
    }


def fig9():
    fridge_spot = (4.25, 0.75)
    wardrobe_spot = (4.25, 3.85)
    tour = [CENTER, fridge_spot, CENTER, ZONE_CENTERS[1], CENTER, wardrobe_spot, CENTER, ZONE_CENTERS[3], CENTER]
    dwell = [0, 30, 0, 20, 0, 30, 0, 20, 0]
    trajectory = walk(tour, 20.0, dwell=dwell)
    events = [
        {"t": 300, "kind": "sensor", "device": "gas-1", "value": True},
        {"t": 330, "kind": "sensor", "device": "gas-1", "value": False},
        {"t": 420, "kind": "sensor", "device": "flame-1", "value": True},
        {"t": 440, "kind": "sensor", "device": "flame-1", "value": False},
    ]
    runs = []
    for i, score in enumerate([40, 55, 70, 85, 97], start=1):
        runs.append({
            "name": f"fig9-s{i}",
            "events": [{"t": 0, "kind": "gameScore", "score100": score}] + events,
        })
    return {
        "name": "fig9",
        "description": "Workload sweep: same day, same tour, ascending game scores.",
        "defaults": {
            "durationSeconds": 600,
            "seed": 7,
            "startHour": 16.0,
            "rangeNoise": 0.1,
            "lossProbability": 0.05,
            "initialMovementHours": 1.0,
            "devices": "default",
            "trajectory": trajectory,
        },
        "runs": runs,
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in [("table6", table6()), ("fig9", fig9())]:
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
