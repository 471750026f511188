"""Independent reference computations used by the tests.

Nothing here calls the package's density, Fisher, or likelihood code.
"""
import math

import numpy as np
from scipy import integrate, optimize


def envelope(dt, tau):
    return np.exp(-np.asarray(dt) ** 2 / (4 * tau ** 2)) / math.sqrt(4 * math.pi * tau ** 2)


def density(alpha, dt, nu, tau, dw):
    return 0.5 * envelope(dt, tau) * (1 + nu * alpha * np.cos(dw * np.asarray(dt)))


def intensity(t, tau):
    return np.exp(-t ** 2 / (2 * tau ** 2)) / math.sqrt(2 * math.pi * tau ** 2)


def marginal_from_joint(alpha, dt, nu, tau, dw):
    """Integrate the two-time law over t1 + t2 at fixed t2 - t1 (Jacobian 1/2)."""
    def joint(s):
        t1, t2 = (s - dt) / 2, (s + dt) / 2
        return 0.5 * intensity(t1, tau) * intensity(t2, tau) * (1 + nu * alpha * math.cos(dw * (t2 - t1)))
    val, _ = integrate.quad(joint, -np.inf, np.inf, epsabs=0, epsrel=1e-12, limit=200)
    return 0.5 * val


def fisher_finite_difference(nu, tau, dw, rel_step=1e-4, points_per_scale=400):
    """E[(d/dw log p)^2] by central differences on p and a dense trapezoid over delays."""
    h = rel_step / tau
    half = 40 * tau
    scale = min(tau, math.pi / abs(dw)) if dw else tau
    n = int(2 * half / scale * points_per_scale) | 1
    t = np.linspace(-half, half, n)
    total = 0.0
    for alpha in (1.0, -1.0):
        p = density(alpha, t, nu, tau, dw)
        dp = (density(alpha, t, nu, tau, dw + h) - density(alpha, t, nu, tau, dw - h)) / (2 * h)
        total += np.trapezoid(dp * dp / p, t)
    return float(total)


def score_root_mle(dt, alpha, nu, lo, hi, grid=8192):
    """argmax of the shift log-likelihood: fine grid scan, then a root of the analytic score."""
    dt = np.asarray(dt)
    alpha = np.asarray(alpha)

    def ll(w):
        return float(np.sum(np.log(np.maximum(1 + nu * alpha * np.cos(w * dt), 0.0))))

    def score(w):
        c = np.cos(w * dt)
        return float(np.sum(-nu * alpha * dt * np.sin(w * dt) / (1 + nu * alpha * c)))

    ws = np.linspace(lo, hi, grid)
    with np.errstate(divide="ignore"):
        vals = np.array([ll(w) for w in ws])
    k = int(np.argmax(vals))
    a, b = ws[max(k - 1, 0)], ws[min(k + 1, grid - 1)]
    sa, sb = score(a), score(b)
    if sa > 0 and sb < 0:
        w = optimize.brentq(score, a, b, xtol=1e-14, rtol=1e-15)
    else:
        w = a if ll(a) >= ll(b) else b
    return w, ll(w)
