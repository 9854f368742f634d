"""Independent high-precision reference values.

Evaluated with mpmath directly from the raw beam/TEM data, without importing
``thermosmc``. Run ``python tests/oracles/generate.py`` to refresh
``reference.json``; the tests only read the frozen file.
"""
import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50

BEAM = dict(L_al="0.315", h="0.003", b="0.025", k="209", rho="2700", cp="898", hc="69.3")
TEM = [dict(r_th="2.21", sigma="0.037", R="10.2", l="0.025"),
       dict(r_th="2.15", sigma="0.044", R="13.5", l="0.025")]
T_A, T_E0, T_EL = mp.mpf("24.6"), mp.mpf(30), mp.mpf(34)


def plant():
    f = {k: mp.mpf(v) for k, v in BEAM.items()}
    tems = [{k: mp.mpf(v) for k, v in t.items()} for t in TEM]
    L = f["L_al"] - tems[0]["l"] - tems[1]["l"]
    av = (2 * L * f["b"] + 2 * L * f["h"]) / (L * f["b"] * f["h"])
    aa = tems[0]["l"] * f["b"] + 2 * tems[0]["l"] * f["h"] + f["b"] * f["h"]
    acs = f["b"] * f["h"]
    theta_bar = f["k"] / (f["rho"] * f["cp"])
    lam = -f["hc"] / (f["rho"] * f["cp"]) * av
    a = [(1 / t["sigma"]) * (1 / t["r_th"] + f["hc"] * aa) for t in tems]
    bb = [f["k"] * acs / t["sigma"] for t in tems]
    return dict(L=L, theta_bar=theta_bar, lam=lam, a0=a[0], a1=a[1], b_bar0=bb[0], b_bar1=bb[1],
                theta=theta_bar / L**2, b0=bb[0] / L, b1=bb[1] / L, area_loss=aa, area_cs=acs,
                hc=f["hc"], tems=tems)


def equilibrium(p):
    # impose T(0), T(L) directly: vt = C1 sinh + C2 cosh, then read u_e from the Robin conditions
    w = mp.sqrt(abs(p["lam"]) / p["theta_bar"])
    L = p["L"]
    A = mp.matrix([[0, 1], [mp.sinh(w * L), mp.cosh(w * L)]])
    c1, c2 = mp.lu_solve(A, mp.matrix([T_E0 - T_A, T_EL - T_A]))
    vt = lambda z: c1 * mp.sinh(w * z) + c2 * mp.cosh(w * z)
    d = lambda z: mp.diff(vt, z)
    ue0 = -p["b_bar0"] * d(0) + p["a0"] * vt(0)
    ue1 = p["b_bar1"] * d(L) + p["a1"] * vt(L)
    return dict(omega=w, c1=c1, c2=c2, u_e0=ue0, u_e1=ue1)


def ultimate_bound(p, phi, k0=15, gamma=(mp.mpf("0.3"),) * 2, alpha=(mp.mpf(1) / 300,) * 2):
    th = p["theta"]
    bmin = th * mp.pi**2 / 4 - p["lam"] - th * mp.pi**4 / (16 * ((k0 + p["a0"]) / p["b0"] + mp.pi**2 / 4))
    rho = min(2 * bmin, *alpha)
    eta = sum(a * th * f**2 / (2 * b * g) for a, f, b, g in zip(alpha, phi, (p["b0"], p["b1"]), gamma))
    eps = rho / 2
    return dict(beta_min=bmin, rho=rho, eta=eta, B=mp.sqrt(2 * eta / (rho - eps)))


def main():
    p = plant()
    eq = equilibrium(p)
    t0 = p["tems"][0]
    q0 = (T_A - 30) / t0["r_th"]
    q1 = (T_A - 30) / t0["r_th"] + t0["sigma"] * 30 + t0["R"] / 2
    flux1 = (q1 - p["hc"] * p["area_loss"] * (30 - T_A)) / p["area_cs"]
    # declared Phi for the default sinusoid (0.35 A), Peltier temperature bound = setpoint/ambient max + 5 K
    amp = mp.mpf("0.35")
    phi = [amp * (max(T_E0, T_A) + 5) + TEM_R(0) / (2 * TEM_S(0)) * amp**2,
           amp * (max(T_EL, T_A) + 5) + TEM_R(1) / (2 * TEM_S(1)) * amp**2]
    ub = ultimate_bound(p, phi)
    out = {k: float(v) for k, v in p.items() if k not in ("tems",)}
    out.update({k: float(v) for k, v in eq.items()})
    out.update({"Q_I0_T30": float(q0), "flux_left_I1_T30": float(flux1),
                "phi0": float(phi[0]), "phi1": float(phi[1])})
    out.update({f"bi_{k}": float(v) for k, v in ub.items()})
    out["poincare_x_lhs"] = float(-mp.pi**2 / 12)
    path = Path(__file__).with_name("reference.json")
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(path.read_text())


def TEM_R(i):
    return mp.mpf(TEM[i]["R"])


def TEM_S(i):
    return mp.mpf(TEM[i]["sigma"])


if __name__ == "__main__":
    main()
