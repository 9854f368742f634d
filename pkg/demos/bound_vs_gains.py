"""Equilibrium, gain conditions and the ultimate bound for the default beam.

Prints the reference profile, the tuning-condition report, and how the
bidirectional bound B moves with the adaptation rate gamma and the
disturbance amplitude.
"""
import numpy as np

from thermosmc.harness import prepare, scenario_from_dict


def main():
    prep = prepare(scenario_from_dict({"mode": "bi"}))
    prof = prep.profile
    print(f"u_e = ({prof.u_e0:.4f}, {prof.u_e1:.4f}), C1 = {prof.c1:.4f}, C2 = {prof.c2:.4f}")
    for zeta in np.linspace(0, prof.length, 6):
        print(f"  T_e({zeta:.3f} m) = {float(prof(zeta)):.3f} C")
    print("\n".join(prep.validation.lines()))
    print(f"\n{'gamma':>6} {'A (A)':>6} {'B':>8}")
    for gamma in (0.1, 0.3, 1.0, 4.0):
        for amp in (0.2, 0.35, 0.8):
            p = prepare(scenario_from_dict({
                "mode": "bi",
                "controller": {"gamma0_A_per_s": gamma, "gamma1_A_per_s": gamma},
                "disturbance": {"amplitude0_A": amp, "amplitude1_A": amp},
            }))
            print(f"{gamma:6.2f} {amp:6.2f} {p.ultimate.bound:8.3f}")


if __name__ == "__main__":
    main()
