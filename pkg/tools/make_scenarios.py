"""Regenerate the bundled scenario files.

Short paths are about 50 m, medium 120 m, long 240 m.  ``line50`` is a
plain straight line outside the table grid.  The "1" variants
revisit by retracing a loop; the "2" variants cross themselves and traverse
segments in opposite directions.  Every path starts at the origin heading +x.
"""
import math
import sys
from pathlib import Path

import numpy as np
import yaml

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from clbench.trajectory import Scenario, WaypointList, scenario_to_dict, straight, waypoints_from_turtle  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "src" / "clbench" / "data" / "scenarios"


def loop(a, b, r):
    """Rounded rectangle, counter-clockwise, starting mid-way along the bottom edge."""
    return [("S", a / 2), ("L", 90, r), ("S", b), ("L", 90, r), ("S", a),
            ("L", 90, r), ("S", b), ("L", 90, r), ("S", a / 2)]


def figure_eight(size, n_laps=1, reverse_second=False, step=1.0):
    """Lemniscate of Gerono rotated so the tangent at the origin is +x."""
    def lap(sign):
        ts = np.linspace(0.0, 2 * math.pi, 400)
        x = size * np.sin(ts)
        y = sign * size * np.sin(ts) * np.cos(ts)
        return x, y

    xs, ys = [], []
    for i in range(n_laps):
        sign = -1.0 if (reverse_second and i % 2 == 1) else 1.0
        x, y = lap(sign)
        xs.append(x if i == 0 else x[1:])
        ys.append(y if i == 0 else y[1:])
    x, y = np.concatenate(xs), np.concatenate(ys)
    # tangent at the start is (size, size): rotate by -45 deg
    c = s = math.sqrt(0.5)
    px, py = c * x + s * y, -s * x + c * y
    seg = np.hypot(np.diff(px), np.diff(py))
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    n = int(math.ceil(arc[-1] / step))
    u = np.linspace(0.0, arc[-1], n + 1)
    return list(zip(np.interp(u, arc, px), np.interp(u, arc, py)))


def build():
    specs = {
        "s1": ("S-bend: two opposite 90 deg turns", 1.0,
               waypoints_from_turtle([("S", 14), ("L", 90, 4), ("S", 12), ("R", 90, 4), ("S", 12)], name="s1")),
        "s2": ("zig-zag with a hairpin that runs back alongside the first leg", 1.0,
               waypoints_from_turtle([("S", 12), ("L", 150, 3), ("S", 12), ("R", 120, 3), ("S", 12)], name="s2")),
        "m1": ("loop with 16 m and 6 m straights driven twice (retrace)", 1.0,
               waypoints_from_turtle(loop(16, 6, 3) * 2, name="m1")),
        "m2": ("figure eight, crossing at the origin", 1.0, None),
        "l1": ("loop with 19 m and 11 m straights driven three times (retrace)", 1.0,
               waypoints_from_turtle(loop(19, 11, 3) * 3, name="l1")),
        "l2": ("figure eight driven forward, then mirrored (opposing crossings)", 1.0, None),
        # not part of the table grid; used for controller and latency checks
        "line50": ("straight 50 m along +x", 1.0, straight(50.0, name="line50", step=5.0)),
    }
    out = {}
    for name, (desc, v, wp) in specs.items():
        if name == "m2":
            wp = WaypointList(tuple(figure_eight(19.7)), name=name)
        elif name == "l2":
            wp = WaypointList(tuple(figure_eight(19.5, n_laps=2, reverse_second=True)), name=name)
        out[name] = Scenario(name, wp, v, desc)
    return out


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for name, sc in build().items():
        path = OUT / f"{name}.yaml"
        path.write_text(yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None))
        print(f"{name}: {sc.waypoints.length():7.1f} m  {len(sc.waypoints.points)} points -> {path.name}")
