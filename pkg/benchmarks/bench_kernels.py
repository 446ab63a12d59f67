"""Time the numba kernels against their numpy counterparts.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each kernel is called once untimed (JIT compile / cache load), then the best
of N runs is reported together with the max deviation between the flavours.
"""
import argparse
import time

import numpy as np
from scipy import integrate

from slowswitch import kernels
from slowswitch.constants import default_constants
from slowswitch.propagation import spectrum_nodes
from slowswitch.response import MediumParams


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    g13 = default_constants().gamma13
    m = MediumParams(od=20.0, gamma13=g13, gamma12=1e-3 * g13, rabi_c_sq=4.0 * g13 ** 2,
                     rabi_s_sq=0.1 * g13 ** 2)
    args = (m.gamma13, m.gamma12, m.gamma24, m.rabi_c_sq, m.rabi_s_sq)
    t_p = 150e-9
    delta = np.linspace(-20 * g13, 20 * g13, 1_000_000)
    det = np.linspace(-5 * g13, 5 * g13, 400)
    nodes, weights = spectrum_nodes(m, t_p, det[0] - 9 / t_p, det[-1] + 9 / t_p)
    rng = np.random.default_rng(0)
    shifts = 2 * g13 * rng.random(200_000)
    gamma_e = 2 * g13
    quad_args = (t_p, m.od, 0.0) + args

    def quad(flavour):
        f = flavour.eq2_integrand()
        return integrate.quad(f, -9.0, 9.0, args=quad_args, epsabs=0.0, epsrel=1e-10,
                              limit=2000)[0]

    return [
        ("response (1e6 points)", lambda k: k.response(delta, *args)),
        (f"filtered_gaussian ({det.size} x {nodes.size})",
         lambda k: k.filtered_gaussian(det, nodes, weights, t_p, m.od, *args)),
        ("lorentz_mean (400 x 2e5)", lambda k: k.lorentz_mean(det, shifts, gamma_e)),
        ("quad over eq2 integrand", quad),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.numba_kernels is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':36s} {'numpy (s)':>10s} {'numba (s)':>10s} {'speedup':>8s} {'max dev':>9s}")
    for name, call in cases():
        t_np = best_of(lambda: call(kernels.numpy_kernels), args.repeat)
        t_nb = best_of(lambda: call(kernels.numba_kernels), args.repeat)
        a = np.asarray(call(kernels.numpy_kernels))
        b = np.asarray(call(kernels.numba_kernels))
        scale = max(float(np.abs(a).max()), 1e-300)
        dev = float(np.abs(a - b).max()) / scale
        print(f"{name:36s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {dev:9.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
