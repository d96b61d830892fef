#!/usr/bin/env python3
"""Closed-loop feedback-band experiment: run a scripted grasp in a bundled
scenario and print each finger's force trajectory and band transitions.
"""

import argparse

from dexlink.config import AppConfig, LoopConfig
from dexlink.daemon import ControlLoop, build_glove, load_glove_model
from dexlink.kinematics import FINGERS
from dexlink.presets import closing_script

BAND_GLYPH = {"none": ".", "haptic": "h", "haptic_force": "H", "force": "F"}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", default="grasp_bottle")
    parser.add_argument("--duration", type=float, default=10.0)
    args = parser.parse_args()

    config = AppConfig(loop=LoopConfig(clock="simulated", duration_s=args.duration, scenario=args.scenario))
    glove_model = load_glove_model(config)
    glove = build_glove(config, closing_script(glove_model, duration_s=args.duration))
    snaps = []
    loop = ControlLoop(config, glove, on_snapshot=snaps.append)
    loop.run_simulated()

    print(f"scenario {args.scenario}: {len(snaps)} ticks at {config.loop.control_rate:.0f} Hz")
    print("band glyphs: . none  h haptic  H haptic+force  F force\n")
    stride = max(1, len(snaps) // 72)
    for i, finger in enumerate(FINGERS):
        glyphs = "".join(BAND_GLYPH[s.feedback[i]] for s in snaps[::stride])
        peak = max(s.forces[i] for s in snaps)
        end = snaps[-1].forces[i]
        print(f"{finger:>7} |{glyphs}| peak {peak:4.0f} g, end {end:4.0f} g")
    transitions = []
    for i, finger in enumerate(FINGERS):
        prev = None
        for s in snaps:
            if s.feedback[i] != prev:
                transitions.append((s.t, finger, s.feedback[i], s.forces[i]))
                prev = s.feedback[i]
    print("\ntransitions:")
    for t, finger, band, grams in transitions:
        print(f"  t={t:7.3f}s {finger:>7} -> {band:12s} ({grams:.0f} g)")


if __name__ == "__main__":
    main()
