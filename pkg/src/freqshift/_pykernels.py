"""Pure numpy versions of the log-likelihood kernels in ``_ckernels.pyx``."""
import numpy as np

_ROWS = 128


def _logterms(dt, alpha, nu, omega):
    t = 1.0 + nu * alpha * np.cos(np.multiply.outer(omega, dt))
    np.maximum(t, 0.0, out=t)
    with np.errstate(divide="ignore"):
        return np.log(t).sum(axis=-1)


def loglik_point(dt, alpha, nu, omega):
    return float(_logterms(np.asarray(dt), np.asarray(alpha), nu, np.float64(omega)))


def loglik_scan(dt, alpha, nu, omega0, step, out):
    dt = np.asarray(dt)
    alpha = np.asarray(alpha)
    count = out.shape[0]
    for lo in range(0, count, _ROWS):
        k = np.arange(lo, min(lo + _ROWS, count))
        out[k] += _logterms(dt, alpha, nu, omega0 + k * step)
