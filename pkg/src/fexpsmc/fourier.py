"""Fourier coefficients of spectral densities and Toeplitz assembly.

Conventions
-----------
Autocovariance-style coefficients are defined without a 1/(2*pi) factor:

    gamma_g(l) = integral_{-pi}^{pi} g(lam) e^{i l lam} d lam.

Bounded integrands are handled on the uniform grid lam_j = -pi + j*Delta,
j = 0..M, Delta = 2*pi/M, by a single FFT.  Because the integrand is
2*pi-periodic, the trapezoid sum with the two half-weighted endpoints
folded together is spectrally accurate (the error is the aliasing of the
integrand's own Fourier coefficients), and it integrates trigonometric
polynomials of degree < M exactly.  An alternative rule="interpolated"
evaluates the integral of the piecewise-linear interpolant of g exactly,
using the hat-function transform W and the endpoint half-hat corrections;
it is exact for piecewise-linear g but only O(Delta^2) for smooth g, so
the spectral rule is the default.

Long-memory integrands |1 - e^{-i lam}|^{-2d} * g(lam) are split into a
singular part with known closed-form coefficients (fractional-noise
autocovariances) plus a bounded remainder:

    |1-e^{-i lam}|^{-2d} g(lam)
        = g(0) |1-e^{-i lam}|^{-2d}
          + |1-e^{-i lam}|^{-2d} (g(lam) - g(0)),

where the second term extends continuously by 0 at lam = 0 whenever g is
smooth (it vanishes like lam^{2-2d}).
"""

import numpy as np
from scipy.linalg import toeplitz as scipy_toeplitz
from scipy.special import gammaln

__all__ = [
    "fft_pow2",
    "ifft_pow2",
    "hat_weight",
    "endpoint_alpha0",
    "fourier_coeffs_bounded",
    "fracdiff_acf",
    "fourier_coeffs_longmemory",
    "build_toeplitz",
]

#: default relative bound on the discarded imaginary residue
IMAG_TOL = 1e-8


def _check_pow2(length):
    if length < 1 or (length & (length - 1)) != 0:
        raise ValueError(f"length {length} is not a positive power of two")


def fft_pow2(s):
    """Discrete Fourier transform F_l = sum_j s_j exp(+2i pi j l / L).

    The input length L must be a power of two.  Note the positive sign in
    the exponent (the transform used for synthesising Fourier integrals);
    the inverse :func:`ifft_pow2` undoes it exactly.
    """
    s = np.asarray(s)
    _check_pow2(s.shape[0])
    # numpy's ifft uses the +i convention with a 1/L factor
    return np.fft.ifft(s) * s.shape[0]


def ifft_pow2(F):
    """Inverse of :func:`fft_pow2`: s_j = (1/L) sum_l F_l exp(-2i pi j l / L)."""
    F = np.asarray(F)
    _check_pow2(F.shape[0])
    return np.fft.fft(F) / F.shape[0]


def hat_weight(lam):
    """Fourier transform factor W of the unit hat function.

    W(lam) = 2 (1 - cos lam) / lam^2, W(0) = 1.  Below |lam| = 0.05 the
    direct quotient loses ~3 digits to cancellation, so the Taylor
    polynomial 1 - lam^2/12 + lam^4/360 - lam^6/20160 is used there; both
    branches are accurate to ~1e-13 at the crossover.  Used by the
    piecewise-linear ("interpolated") rule.
    """
    lam = np.asarray(lam, dtype=float)
    out = np.empty_like(lam)
    small = np.abs(lam) < 0.05
    ls = lam[small]
    ls2 = ls * ls
    out[small] = 1.0 + ls2 * (-1.0 / 12.0 + ls2 * (1.0 / 360.0 - ls2 / 20160.0))
    lb = lam[~small]
    out[~small] = 2.0 * (1.0 - np.cos(lb)) / (lb * lb)
    return out if out.ndim else float(out)


def endpoint_alpha0(lam):
    """Real part of the endpoint (half-hat) correction: -W(lam)/2, value -1/2 at 0."""
    return -0.5 * hat_weight(lam)


def default_grid_size(n):
    """Smallest power of two >= 2 n."""
    M = 1
    while M < 2 * n:
        M *= 2
    return M


def _interp_rule(gv, M, n):
    """Exact Fourier integrals of the piecewise-linear interpolant of g.

    gamma(l) = Delta (-1)^l [ W(th) (F_l - g_0)
                              + beta(th) g_0 + conj(beta(th)) g_M ],
    th = l*Delta, with beta = W/2 + i*(1/th - sin(th)/th^2) the transform
    of the left half-hat.  Reduces to the trapezoid rule at l = 0.
    """
    delta = 2.0 * np.pi / M
    F = np.fft.ifft(gv[:M]) * M
    l = np.arange(n)
    th = l * delta
    W = hat_weight(th)
    im_beta = np.empty(n)
    small = th < 0.05
    ts = th[small]
    ts2 = ts * ts
    # 1/th - sin(th)/th^2 = th/6 - th^3/120 + th^5/5040 - ...
    im_beta[small] = ts * (1.0 / 6.0 + ts2 * (-1.0 / 120.0 + ts2 / 5040.0))
    tb = th[~small]
    im_beta[~small] = 1.0 / tb - np.sin(tb) / (tb * tb)
    beta = 0.5 * W + 1j * im_beta
    vals = delta * (-1.0) ** l * (W * (F[:n] - gv[0]) + beta * gv[0] + np.conj(beta) * gv[M])
    return vals


def _spectral_rule(gv, M, n):
    """Periodic trapezoid: fold the two half-weighted endpoints, one FFT."""
    s = gv[:M].astype(complex)
    s[0] = 0.5 * (gv[0] + gv[M])
    F = np.fft.ifft(s) * M
    l = np.arange(n)
    return (2.0 * np.pi / M) * (-1.0) ** l * F[:n]


def fourier_coeffs_bounded(g, n, M=None, rule="spectral"):
    """Coefficients gamma_g(l) = int_{-pi}^{pi} g(lam) e^{i l lam} dlam, l = 0..n-1.

    Parameters
    ----------
    g : callable
        Vectorised bounded integrand on [-pi, pi].
    n : int
        Number of coefficients (n >= 1).
    M : int, optional
        Grid resolution; must be a power of two >= 2. Defaults to the
        smallest power of two >= 2 n.
    rule : {"spectral", "interpolated"}
        "spectral" (default) is the periodic trapezoid rule -- spectrally
        accurate for smooth periodic g and exact for trigonometric
        polynomials of degree < M.  "interpolated" integrates the
        piecewise-linear interpolant of g exactly (error O(M^-2)).

    The assembled coefficients are complex only through rounding (for even
    g) or genuine asymmetry of g; the real part is returned and the
    imaginary residue is required to stay below ``IMAG_TOL`` relative to
    the coefficient scale.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if M is None:
        M = default_grid_size(n)
    _check_pow2(M)
    if M < 2:
        raise ValueError("M must be >= 2")
    lam = -np.pi + 2.0 * np.pi * np.arange(M + 1) / M
    gv = np.asarray(g(lam), dtype=float)
    if gv.shape != lam.shape:
        raise ValueError("g must return one value per grid node")
    if not np.all(np.isfinite(gv)):
        raise ValueError("g produced non-finite values on the grid")
    if rule == "spectral":
        vals = _spectral_rule(gv, M, n)
    elif rule == "interpolated":
        vals = _interp_rule(gv, M, n)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    scale = max(np.max(np.abs(vals.real)), 1e-300)
    resid = np.max(np.abs(vals.imag))
    if resid > IMAG_TOL * scale:
        raise ValueError(
            f"imaginary residue {resid:.3e} exceeds {IMAG_TOL:.0e} of the "
            f"coefficient scale {scale:.3e}; integrand looks asymmetric"
        )
    return vals.real.copy()


def fracdiff_acf(d, lags):
    """Autocovariances of fractional noise with unit innovation variance.

    Returns (1/(2 pi)) * int_{-pi}^{pi} |1 - e^{-i lam}|^{-2d} e^{i l lam} dlam
    for each requested lag:

        gamma*(0) = Gamma(1-2d) / Gamma(1-d)^2,
        gamma*(l+1) = gamma*(l) * (l + d) / (l + 1 - d).

    The ratio recurrence follows from gamma*(l) proportional to
    Gamma(l+d)/Gamma(l+1-d) and holds from l = 0; the l = 0 value is
    evaluated in log-Gamma space.  At d = 0 this degenerates cleanly to
    (1, 0, 0, ...).

    Parameters
    ----------
    d : float in [0, 0.5)
    lags : int or array of ints
        A scalar lag, or the lags 0..len-1 when an array is wanted; any
        nonnegative integer array is accepted.
    """
    if not 0.0 <= d < 0.5:
        raise ValueError(f"d must lie in [0, 0.5), got {d}")
    scalar = np.isscalar(lags)
    lag_arr = np.atleast_1d(np.asarray(lags, dtype=np.int64))
    if lag_arr.size and lag_arr.min() < 0:
        raise ValueError("lags must be nonnegative")
    lmax = int(lag_arr.max()) if lag_arr.size else 0
    seq = np.empty(lmax + 1)
    seq[0] = np.exp(gammaln(1.0 - 2.0 * d) - 2.0 * gammaln(1.0 - d))
    for l in range(lmax):
        seq[l + 1] = seq[l] * (l + d) / (l + 1.0 - d)
    out = seq[lag_arr]
    return float(out[0]) if scalar else out


def fourier_coeffs_longmemory(d, g, n, M=None, rule="spectral"):
    """Coefficients of f(lam) = |1 - e^{-i lam}|^{-2d} g(lam), l = 0..n-1.

    g must be bounded, smooth and even with a finite value at 0; the
    singular factor is integrated in closed form against g(0) and the
    remainder |1-e^{-i lam}|^{-2d} (g(lam) - g(0)) -- continuous, equal to
    0 at lam = 0 -- goes through :func:`fourier_coeffs_bounded`.

    At d = 0 the split is exact and reduces to the bounded path alone.
    """
    if not 0.0 <= d < 0.5:
        raise ValueError(f"d must lie in [0, 0.5), got {d}")
    g0 = float(np.asarray(g(np.array([0.0])))[0])

    def remainder(lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            sing = (2.0 - 2.0 * np.cos(lam)) ** (-d)
            vals = sing * (np.asarray(g(lam), dtype=float) - g0)
        return np.where(np.abs(lam) < 1e-300, 0.0, vals)

    bounded = fourier_coeffs_bounded(remainder, n, M=M, rule=rule)
    return 2.0 * np.pi * g0 * fracdiff_acf(d, np.arange(n)) + bounded


def build_toeplitz(acf, ridge=0.0):
    """Dense symmetric Toeplitz matrix T[i, j] = acf[|i - j|] (+ ridge on all entries).

    ``ridge`` adds a constant to every entry (a rank-one all-ones
    perturbation), as needed by the marginal-likelihood covariance
    T(fbar) + (1/g_mu) * ones.
    """
    acf = np.asarray(acf, dtype=float)
    if acf.ndim != 1 or acf.size < 1:
        raise ValueError("acf must be a nonempty 1-d array")
    T = scipy_toeplitz(acf)
    if ridge:
        T += ridge
    return T
