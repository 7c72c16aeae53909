"""Regenerate derived.json from mpmath, independently of the package.

    python tests/golden/make_golden.py

Every value here is computed with mpmath at 40 digits from the defining
integrals / formulas; none of the package's code is imported.
"""

import json
import os

import mpmath as mp

mp.mp.dps = 40
HERE = os.path.dirname(os.path.abspath(__file__))


def lam(th):
    return mp.cot(th / 2)


def mu(th):
    return mp.pi / (mp.sin(th) * mp.ellipk(mp.sin(th) ** 2))


def f1(th):
    L = lam(th)
    I = mp.quad(lambda t: 1 / mp.sqrt((t * t - L ** -2) * (L * L - t * t)), [1, L])
    return -4 * mu(th) * I


def sigma_delta(a, b):
    s = mp.mpc(mp.cos((a + b) / 2), mp.cos((a - b) / 2))
    d = mp.mpc(mp.sin((a - b) / 2), mp.sin((a + b) / 2))
    return s, d


def poly(x, L):
    return (x * x + L * L) * (x * x + L ** -2)


def end_A_sheet(th, a, b, n=4000):
    """Continue (u_A, y) from (alpha, beta) = (0, 0), where u_A = 0 and y = +1, along a straight line."""
    L = lam(th)
    y = mp.mpf(1)
    for k in range(1, n + 1):
        t = mp.mpf(k) / n
        s, d = sigma_delta(a * t, b * t)
        u = mp.conj(d) / mp.conj(s)
        r = mp.sqrt(poly(u, L))
        y = r if abs(r - y) <= abs(r + y) else -r
    return u, y


def end_A_integral(th, a, b):
    """Contour integral of Phi around end A in the u = 1/z chart (counterclockwise in u)."""
    L, m = lam(th), mu(th)
    s, d = sigma_delta(a, b)
    uA, yA = end_A_sheet(th, a, b)
    p0 = poly(uA, L)
    gap = min(abs(uA - bp) for bp in (1j * L, -1j * L, 1j / L, -1j / L))
    r = gap / 8

    def phi(t, k):
        u = uA + r * mp.expj(t)
        du = 1j * r * mp.expj(t)
        y = yA * mp.sqrt(poly(u, L) / p0)
        g = (s + d * u) / (1j * (mp.conj(s) * u - mp.conj(d)))
        dh = -m / y
        comp = (0.5 * (1 / g - g), 0.5j * (1 / g + g), 1)[k]
        return comp * dh * du

    return [mp.quad(lambda t: phi(t, k), [0, mp.pi / 2, mp.pi, 3 * mp.pi / 2, 2 * mp.pi])
            for k in range(3)]


def vertical_flux(th, a, b):
    L, m = lam(th), mu(th)
    s, d = sigma_delta(a, b)

    def f(t):
        num = mp.cos(b) * mp.sin(t) + 1j * (mp.sin(a) * mp.sin(b) * mp.sin(t) - mp.cos(a) * mp.cos(t))
        den = abs(s - d * mp.expj(-t)) ** 2 * mp.sqrt(L * L + L ** -2 + 2 * mp.cos(2 * t))
        return num / den
    return -2 * m * mp.quad(f, [-mp.pi, 0, mp.pi])


def F(x):
    return float(x)


def C(z):
    z = mp.mpc(z)
    return [float(z.real), float(z.imag)]


def main():
    thetas = [0.2, 0.5, mp.pi / 4, 1.0, 1.4]
    out = {"_source": "mpmath " + mp.__version__ + ", 40 digits; see make_golden.py"}
    out["elliptic_K"] = [[m, F(mp.ellipk(m))] for m in (0.0, 0.1, 0.5, 0.9, 0.99, 0.999999)]
    out["theta_functions"] = [
        {"theta": F(t), "lambda": F(lam(t)), "mu": F(mu(t)), "f1": F(f1(t)),
         "conjugation_scale": F(mp.ellipk(mp.sin(t) ** 2) / mp.ellipk(mp.cos(t) ** 2))}
        for t in thetas]
    triples = [(0.7, 0.3, 0.4), (0.5, -0.6, 1.2), (1.2, 0.9, 2.4), (0.3, 1.0, 2.5),
               (mp.pi / 4, -0.3, 0.2), (1.0, 0.4, 0.6), (0.9, -1.2, 0.05)]
    rows = []
    for th, a, b in triples:
        I = end_A_integral(mp.mpf(th), mp.mpf(a), mp.mpf(b))
        rows.append({"triple": [F(th), F(a), F(b)], "integral": [C(v) for v in I]})
    out["end_A_integral"] = rows
    out["vertical_flux_integral"] = [{"triple": [F(t), F(a), F(b)], "value": C(vertical_flux(t, a, b))}
                                     for t, a, b in [(0.3, 0.0, 0.0), (0.7, 0.3, 0.4), (1.2, 0.5, 1.0)]]
    out["scherk_limit_a"] = [{"alpha0": a, "beta0": b,
                              "a": F(2 / mp.sin(mp.acos(mp.cos(a) * mp.cos(b))))}
                             for a, b in [(0.5, 0.5), (0.2, 1.3), (1.0, 0.1)]]
    with open(os.path.join(HERE, "derived.json"), "w") as fh:
        json.dump(out, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
