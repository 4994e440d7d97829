#!/usr/bin/env python3
"""Regenerates scenarios/mining/s*.json.

Each scenario is a rectangular grid of locations l0..l{n-1} in row-major
order with 4-neighbour connectivity, a risk level per location, a starting
location for the robot and one location per ore.
"""

import json
import pathlib

ORES = ["gold", "silver", "iron"]
SYMBOLS = {"gold": "Au", "silver": "Ag", "iron": "Fe"}
LEVELS = ["low", "medium", "high"]

LAWS = [
    "move(L1, L2) causes at_loc(L2)",
    "move(L1, L2) causes -at_loc(L1)",
    "collect(O) causes has_ore(O)",
    "impossible move(L1, L2) if -connected(L1, L2)",
    "impossible move(L1, L2) if -at_loc(L1)",
    "impossible collect(O) if at_loc(L), -ore_loc(O, L)",
    "impossible collect(O) if has_ore(O)",
]


def grid(rows, cols, risk, agent, ores, horizon, sid, name, description):
    n = rows * cols
    locs = [f"l{i}" for i in range(n)]
    assert len(risk) == n
    connected = []
    for i in range(n):
        r, c = divmod(i, cols)
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < rows and 0 <= cc < cols:
                connected.append(f"connected(l{i},l{rr * cols + cc})")
    levels = {"L": "low", "M": "medium", "H": "high"}
    risk_facts = [f"has_risk_level(l{i},{levels[x]})" for i, x in enumerate(risk)]
    initial = []
    for loc in locs:
        initial.append(("" if loc == agent else "-") + f"at_loc({loc})")
    for ore in ORES:
        initial.append(f"-has_ore({ore})")
    for ore in ORES:
        for loc in locs:
            initial.append(("" if ores[ore] == loc else "-") + f"ore_loc({ore},{loc})")
    cells = [
        {"id": f"l{i}", "row": i // cols, "col": i % cols, "risk": levels[risk[i]]}
        for i in range(n)
    ]
    markers = [{"label": "robot", "at": agent}] + [
        {"label": SYMBOLS[o], "at": ores[o]} for o in ORES
    ]
    return {
        "id": sid,
        "name": name,
        "description": description,
        "sorts": {"location": locs, "ore": ORES, "level": LEVELS},
        "statics": {
            "schemas": ["connected(location,location)", "has_risk_level(location,level)"],
            "facts": connected + risk_facts,
        },
        "fluents": ["at_loc(location)", "has_ore(ore)", "ore_loc(ore,location)"],
        "actions": [
            {"schema": "move(location,location)", "describe": "Move from {0} to {1}"},
            {"schema": "collect(ore)", "describe": "Collect {0}"},
            {"schema": "wait", "describe": "Wait"},
        ],
        "laws": LAWS,
        "initial": initial,
        "subgoals": [f"has_ore({o})" for o in ORES],
        "horizon": horizon,
        "display": {"rows": rows, "cols": cols, "cells": cells, "markers": markers},
    }


SCENARIOS = [
    grid(3, 3, "LLLMHLMLL", "l4", {"gold": "l0", "silver": "l7", "iron": "l1"}, 14,
         "s1", "Mining 1: high-risk start",
         "Robot starts on the high-risk centre; medium risk at l3 and l6."),
    grid(3, 3, "LLLLLLLLL", "l4", {"gold": "l8", "silver": "l0", "iron": "l2"}, 12,
         "s2", "Mining 2: all low risk",
         "No risky cells, so only the collection order separates the modes."),
    grid(3, 3, "LMLMHMLML", "l0", {"gold": "l2", "silver": "l8", "iron": "l6"}, 14,
         "s3", "Mining 3: risky cross",
         "Corners are low risk and joined only through medium cells; Safe cannot leave l0."),
    grid(3, 3, "LLMLHMLLL", "l6", {"gold": "l0", "silver": "l2", "iron": "l8"}, 14,
         "s4", "Mining 4: silver behind medium risk",
         "Silver sits on a medium cell; the Safe robot collects gold only."),
    grid(3, 3, "LLLLHHLHL", "l0", {"gold": "l1", "silver": "l3", "iron": "l8"}, 12,
         "s5", "Mining 5: iron enclosed by high risk",
         "Iron is reachable only across high-risk cells."),
    grid(3, 3, "LMLLMLLML", "l0", {"gold": "l8", "silver": "l6", "iron": "l2"}, 14,
         "s6", "Mining 6: medium wall",
         "A medium-risk column splits the grid; Normal crosses it, Safe cannot."),
    grid(2, 2, "LMHL", "l0", {"gold": "l3", "silver": "l0", "iron": "l1"}, 8,
         "s7", "Mining 7: small grid",
         "A 2x2 grid where the risky robot collects silver first."),
    grid(3, 4, "LLLLLHHLLLLL", "l0", {"gold": "l11", "silver": "l4", "iron": "l3"}, 16,
         "s8", "Mining 8: wide grid",
         "Three by four grid with a high-risk pair in the middle row."),
    grid(3, 3, "LLMMHHMHL", "l0", {"gold": "l1", "silver": "l2", "iron": "l8"}, 10,
         "s9", "Mining 9: staged escalation",
         "Gold in the low-risk start area, silver next to it on a medium cell, "
         "iron behind high-risk cells."),
    grid(4, 4, "LLLLLMMLLHMLLLLL", "l0", {"gold": "l15", "silver": "l5", "iron": "l12"}, 20,
         "s10", "Mining 10: large grid",
         "Four by four grid with a mixed-risk core."),
]


def main():
    root = pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "mining"
    root.mkdir(parents=True, exist_ok=True)
    for s in SCENARIOS:
        (root / f"{s['id']}.json").write_text(json.dumps(s, indent=2) + "\n")


if __name__ == "__main__":
    main()
