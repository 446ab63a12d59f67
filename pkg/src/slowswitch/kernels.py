"""Hot inner loops, each in a numba and a numpy flavour.

``filtered_gaussian`` evaluates, for every detuning d,
``sum_j w_j exp(-2 t_p^2 (u_j - d)^2) exp(-od Im f(u_j))`` over quadrature nodes
``u_j`` (sorted) in total detuning, so the response is computed once per node
and each detuning only sums the nodes within 9 / t_p of it.

The module-level names (``response``, ``filtered_gaussian``, ``lorentz_mean``,
``eq2_integrand``) point at the numba versions unless numba is missing or
``SLOWSWITCH_DISABLE_NUMBA`` is set.  Both flavours stay importable through
:data:`numba_kernels` and :data:`numpy_kernels` so they can be benchmarked and
cross-checked against each other.

The four-level response is evaluated exactly as the closed form is written:
numerator ``g13 (Os^2 - 4 d12 d24)`` over
``d24 (4 d12 d13 - Oc^2) - d13 Os^2`` with ``dij = delta + i gij``.  An exactly
vanishing denominator yields ``nan`` so callers can report it.
"""
from types import SimpleNamespace

import numpy as np

from . import _accel
from ._accel import njit

_CHUNK = 1 << 18
# Gaussian pulse weight exp(-2 x^2) is below 1e-70 beyond |x| = 9.
_REACH = 9.0


# -- numpy -------------------------------------------------------------------

def _response_np(delta, g13, g12, g24, oc2, os2):
    delta = np.asarray(delta, dtype=np.float64)
    d12 = delta + 1j * g12
    d13 = delta + 1j * g13
    d24 = delta + 1j * g24
    num = g13 * (os2 - 4.0 * d12 * d24)
    den = d24 * (4.0 * d12 * d13 - oc2) - d13 * os2
    out = np.full(delta.shape, np.nan + 0j)
    ok = den != 0
    np.divide(num, den, out=out, where=ok)
    return out


def _filtered_gaussian_np(detunings, nodes, weights, t_p, od, g13, g12, g24, oc2, os2):
    detunings = np.asarray(detunings, dtype=np.float64)
    nodes = np.asarray(nodes, dtype=np.float64)
    g = np.asarray(weights, dtype=np.float64) * np.exp(
        -od * _response_np(nodes, g13, g12, g24, oc2, os2).imag)
    lo = np.searchsorted(nodes, detunings - _REACH / t_p)
    hi = np.searchsorted(nodes, detunings + _REACH / t_p)
    out = np.empty(detunings.shape[0])
    for i in range(detunings.shape[0]):
        x = t_p * (nodes[lo[i]:hi[i]] - detunings[i])
        out[i] = np.exp(-2.0 * x * x) @ g[lo[i]:hi[i]]
    return out


def _lorentz_mean_np(detunings, shifts, gamma_e):
    detunings = np.asarray(detunings, dtype=np.float64)
    shifts = np.asarray(shifts, dtype=np.float64)
    out = np.empty(detunings.shape[0])
    for k, d in enumerate(detunings):
        acc = 0.0
        for start in range(0, shifts.shape[0], _CHUNK):
            x = (d - shifts[start:start + _CHUNK]) / gamma_e
            acc += np.sum(1.0 / (1.0 + 4.0 * x * x))
        out[k] = acc / shifts.shape[0]
    return out


def _eq2_integrand_py(x, t_p, od, dp, g13, g12, g24, oc2, os2):
    delta = dp + x / t_p
    d12 = complex(delta, g12)
    d13 = complex(delta, g13)
    d24 = complex(delta, g24)
    den = d24 * (4.0 * d12 * d13 - oc2) - d13 * os2
    if den == 0:
        return float("nan")
    f = g13 * (os2 - 4.0 * d12 * d24) / den
    return np.exp(-2.0 * x * x - od * f.imag)


# -- numba -------------------------------------------------------------------

@njit(cache=True)
def _response_scalar_nb(delta, g13, g12, g24, oc2, os2):
    d12 = complex(delta, g12)
    d13 = complex(delta, g13)
    d24 = complex(delta, g24)
    den = d24 * (4.0 * d12 * d13 - oc2) - d13 * os2
    if den == 0:
        return complex(np.nan, np.nan)
    return g13 * (os2 - 4.0 * d12 * d24) / den


@njit(cache=True)
def _response_flat_nb(delta, g13, g12, g24, oc2, os2):
    out = np.empty(delta.shape[0], dtype=np.complex128)
    for i in range(delta.shape[0]):
        out[i] = _response_scalar_nb(delta[i], g13, g12, g24, oc2, os2)
    return out


def _response_nb(delta, g13, g12, g24, oc2, os2):
    delta = np.asarray(delta, dtype=np.float64)
    flat = _response_flat_nb(np.ascontiguousarray(delta).ravel(),
                             float(g13), float(g12), float(g24), float(oc2), float(os2))
    return flat.reshape(delta.shape)


@njit(cache=True)
def _filtered_gaussian_kernel_nb(detunings, nodes, weights, t_p, od, g13, g12, g24, oc2, os2):
    n = nodes.shape[0]
    g = np.empty(n)
    for j in range(n):
        f = _response_scalar_nb(nodes[j], g13, g12, g24, oc2, os2)
        g[j] = weights[j] * np.exp(-od * f.imag)
    lo = np.searchsorted(nodes, detunings - _REACH / t_p)
    hi = np.searchsorted(nodes, detunings + _REACH / t_p)
    out = np.empty(detunings.shape[0])
    for i in range(detunings.shape[0]):
        acc = 0.0
        for j in range(lo[i], hi[i]):
            x = t_p * (nodes[j] - detunings[i])
            acc += g[j] * np.exp(-2.0 * x * x)
        out[i] = acc
    return out


def _filtered_gaussian_nb(detunings, nodes, weights, t_p, od, g13, g12, g24, oc2, os2):
    return _filtered_gaussian_kernel_nb(
        np.ascontiguousarray(detunings, dtype=np.float64),
        np.ascontiguousarray(nodes, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        float(t_p), float(od), float(g13), float(g12), float(g24), float(oc2), float(os2))


@njit(cache=True)
def _lorentz_mean_kernel_nb(detunings, shifts, gamma_e):
    out = np.empty(detunings.shape[0])
    for k in range(detunings.shape[0]):
        acc = 0.0
        for i in range(shifts.shape[0]):
            x = (detunings[k] - shifts[i]) / gamma_e
            acc += 1.0 / (1.0 + 4.0 * x * x)
        out[k] = acc / shifts.shape[0]
    return out


def _lorentz_mean_nb(detunings, shifts, gamma_e):
    return _lorentz_mean_kernel_nb(np.ascontiguousarray(detunings, dtype=np.float64),
                                   np.ascontiguousarray(shifts, dtype=np.float64),
                                   float(gamma_e))


_EQ2_CFUNC = None


def _eq2_integrand_nb():
    """``scipy.LowLevelCallable`` for quad; extra args follow the python order."""
    global _EQ2_CFUNC
    if _EQ2_CFUNC is None:
        import numba
        from numba import types
        from scipy import LowLevelCallable

        sig = types.float64(types.intc, types.CPointer(types.float64))

        @numba.cfunc(sig, cache=True)
        def integrand(n, xx):
            x = xx[0]
            t_p = xx[1]
            f = _response_scalar_nb(xx[3] + x / t_p, xx[4], xx[5], xx[6], xx[7], xx[8])
            return np.exp(-2.0 * x * x - xx[2] * f.imag)

        _EQ2_CFUNC = LowLevelCallable(integrand.ctypes)
    return _EQ2_CFUNC


numpy_kernels = SimpleNamespace(
    name="numpy",
    response=_response_np,
    filtered_gaussian=_filtered_gaussian_np,
    lorentz_mean=_lorentz_mean_np,
    eq2_integrand=lambda: _eq2_integrand_py,
)

numba_kernels = SimpleNamespace(
    name="numba",
    response=_response_nb,
    filtered_gaussian=_filtered_gaussian_nb,
    lorentz_mean=_lorentz_mean_nb,
    eq2_integrand=_eq2_integrand_nb,
) if _accel.HAS_NUMBA else None

active = numba_kernels if _accel.USE_NUMBA else numpy_kernels

response = active.response
filtered_gaussian = active.filtered_gaussian
lorentz_mean = active.lorentz_mean
eq2_integrand = active.eq2_integrand
