"""NumPy implementations of the hot kernels (fallback when the extension is absent)."""

import numpy as np


def barrier_vec(y, lo, hi, tol):
    bad = np.flatnonzero(~((y > lo + tol) & (y < hi - tol)))
    if bad.size:
        return None, int(bad[0])
    return np.log(hi * (lo - y) / (lo * (hi - y))), -1


def barrier_inverse_vec(s, lo, hi):
    out = np.empty_like(s)
    pos = s >= 0.0
    e = np.exp(-np.abs(s))
    out[pos] = lo[pos] * hi[pos] * (1.0 - e[pos]) / (lo[pos] - hi[pos] * e[pos])
    neg = ~pos
    out[neg] = lo[neg] * hi[neg] * (e[neg] - 1.0) / (lo[neg] * e[neg] - hi[neg])
    return out


def rate_factor_vec(s, lo, hi):
    return (lo * lo * np.exp(s) - 2.0 * lo * hi + hi * hi * np.exp(-s)) / (hi * lo * lo - lo * hi * hi)


def grid_regressors(omega0, C, Rinv, Wa):
    """Return (omega, u) for every grid point under actor weights ``Wa``."""
    v = np.einsum("nlm,l->nm", C, Wa)
    u = -0.5 * (v @ Rinv.T)
    omega = omega0 + np.einsum("nlm,nm->nl", C, u)
    return omega, u


def learner_rates(omega0, C, q, R, Rinv, Wc, Gamma, Wa, kc, ka1, ka2, beta, gamma):
    N = omega0.shape[0]
    v = np.einsum("nlm,l->nm", C, Wa)
    u = -0.5 * (v @ Rinv.T)
    Cu = np.einsum("nlm,nm->nl", C, u)
    omega = omega0 + Cu
    ow = omega @ Wc
    delta = ow + q + np.einsum("ni,ij,nj->n", u, R, u)
    rho = 1.0 + gamma * np.einsum("nl,nl->n", omega, omega)

    dWc = -(kc / N) * (Gamma @ (omega.T @ (delta / rho)))

    scaled = omega / rho[:, None]
    M = scaled.T @ scaled
    dGamma = beta * Gamma - (kc / N) * (Gamma @ M @ Gamma)
    dGamma = 0.5 * (dGamma + dGamma.T)

    # G_sigma_k @ Wa == -2 C_k u_k
    dWa = -ka1 * (Wa - Wc) + (kc / (4.0 * N)) * ((-2.0 * Cu).T @ (ow / rho)) - ka2 * Wa
    return dWc, dGamma, dWa
