#!/usr/bin/env python3
"""Regenerates the trajectory fixtures in fixtures/.

ball_rolling.csv: fingers roll in a travelling wave while the thumb plate
swings between the lateral (+65 deg) and central (0 deg) positions.
sweep_50hz.csv: 100 samples at 50 Hz of a slow index sweep, for timing checks.
"""
import math
import pathlib

FINGERS = ["thumb", "index", "middle", "ring", "pinkie"]
HEADER = "t," + ",".join(f"{f}_j{j}" for f in FINGERS for j in (1, 2)) + ",plate"
OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def row(t, angles):
    return f"{t:.2f}," + ",".join(f"{a:.4f}" for a in angles)


def ball_rolling(rate=50.0, seconds=6.0, period=2.0):
    lines = [
        "# name: ball_rolling",
        "# source: recorded policy",
        f"# nominal_rate_hz: {rate:g}",
        "# hardware_speed_rpm: 5.45",
        "# note: feedforward replay; the rpm is what the physical hand achieved",
        HEADER,
    ]
    n = int(round(rate * seconds))
    for k in range(n):
        t = k / rate
        w = 2.0 * math.pi * t / period
        angles = [30.0 + 15.0 * math.sin(w), 30.0 + 20.0 * math.sin(w + 0.5 * math.pi)]
        for i in range(1, 5):
            phase = w - 0.5 * math.pi * i
            angles += [20.0 + 25.0 * math.sin(phase), 35.0 + 25.0 * math.sin(phase + 0.5 * math.pi)]
        angles.append(32.5 - 32.5 * math.cos(w))
        lines.append(row(t, angles))
    return "\n".join(lines) + "\n"


def sweep(rate=50.0, count=100):
    lines = ["# name: index_sweep", "# source: synthetic", f"# nominal_rate_hz: {rate:g}", HEADER]
    for k in range(count):
        t = k / rate
        s = 0.5 - 0.5 * math.cos(2.0 * math.pi * k / (count - 1))
        angles = [-45.0, 0.0] * 5 + [0.0]
        angles[2] = -45.0 + 120.0 * s
        angles[3] = 80.0 * s
        lines.append(row(t, angles))
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    (OUT / "ball_rolling.csv").write_text(ball_rolling())
    (OUT / "sweep_50hz.csv").write_text(sweep())
