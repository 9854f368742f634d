"""Why the leakage term pays off: boundary energy against a frozen relay gain.

Holds the relay gain M fixed (no adaptation) under the halved disturbance and
sensor noise, and prints the left-boundary energy for a sweep of M. Too small a
gain lets the disturbance through; too large a gain chatters. A gain frozen at
the value reached under the full disturbance sits on the right of the minimum,
which is where the leaking law can still move and the dead-zone law cannot.
"""
from thermosmc import run_scenario, scenario_from_dict


def energy(m, seed=0):
    res = run_scenario(scenario_from_dict({
        "mode": "mono", "seed": seed, "duration_s": 400.0, "initial": {"kind": "equilibrium"},
        "controller": {"m0_init": m, "m1_init": m, "eps0_K": 1e9, "eps1_K": 1e9},
        "phases": [{"t_start_s": 0.0, "controller_on": True, "adaptation_on": False,
                    "disturbance_scale": 0.5}],
        "metrics": {"energy_window_s": [160.0, 400.0]},
    }))
    return res.metrics["E"]


if __name__ == "__main__":
    print(f"{'M':>6} {'E (K^2)':>9}")
    for m in (0, 2, 4, 6, 8, 10, 14, 20):
        print(f"{m:6.1f} {energy(m):9.2f}")
