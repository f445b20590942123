"""Memory-lifetime extraction from efficiency-versus-storage-time series.

Fits are Levenberg-Marquardt least squares with analytic Jacobians for
two candidate decay models:

- exponential: eta(t) = A exp(-t / tau)
- gaussian:    eta(t) = A exp(-(t / t_g)^2)

Confidence intervals come from the parameter covariance
(J^T J)^{-1} s^2 scaled by the Student-t quantile with n - 2 degrees of
freedom; a residual bootstrap is available as a cross-check.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, stats

__all__ = [
    "LifetimeSeries",
    "LifetimeFit",
    "fit_lifetime",
    "select_model",
    "make_synthetic_series",
    "series_to_csv",
    "series_from_csv",
]

_MODELS = ("exponential", "gaussian")


@dataclass(frozen=True)
class LifetimeSeries:
    """Efficiency samples versus storage time.

    scale_factor records any overall rescaling applied to the raw
    efficiencies (for example a calibration correction); it is carried
    as provenance and never applied silently.
    """

    hold_time_s: np.ndarray
    efficiency: np.ndarray
    uncertainty: np.ndarray | None = None
    scale_factor: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.hold_time_s, dtype=float)
        y = np.asarray(self.efficiency, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("series needs at least two points")
        if np.any(np.diff(t) <= 0):
            raise ValueError("hold times must be strictly increasing")
        if y.shape != t.shape:
            raise ValueError("efficiency length must match hold times")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(y)):
            raise ValueError("series values must be finite")
        sigma = self.uncertainty
        if sigma is not None:
            sigma = np.asarray(sigma, dtype=float)
            if sigma.shape != t.shape or np.any(sigma <= 0):
                raise ValueError("uncertainties must be positive and match")
        object.__setattr__(self, "hold_time_s", t)
        object.__setattr__(self, "efficiency", y)
        object.__setattr__(self, "uncertainty", sigma)

    def scaled(self, factor: float) -> "LifetimeSeries":
        """Rescaled copy; the factor accumulates in scale_factor."""
        sigma = None if self.uncertainty is None else self.uncertainty * factor
        return LifetimeSeries(self.hold_time_s, self.efficiency * factor,
                              sigma, self.scale_factor * factor)

    @property
    def n_points(self) -> int:
        return int(self.hold_time_s.size)


def _model_and_jac(model: str, t: np.ndarray, params: np.ndarray):
    a, scale = params
    if model == "exponential":
        e = np.exp(-t / scale)
        y = a * e
        jac = np.column_stack([e, a * e * t / scale**2])
    else:
        e = np.exp(-((t / scale) ** 2))
        y = a * e
        jac = np.column_stack([e, 2.0 * a * e * t**2 / scale**3])
    return y, jac


@dataclass(frozen=True)
class LifetimeFit:
    """Result of a single-model lifetime fit.

    timescale_s is tau for the exponential model and t_g for the
    gaussian model. sse is the (weighted) sum of squared residuals and
    aic the Akaike information criterion used for model comparison.
    failed flags degenerate input (for example a constant series) for
    which the decay time is unidentifiable.
    """

    model: str
    amplitude: float
    timescale_s: float
    amplitude_sigma: float
    timescale_sigma: float
    amplitude_ci95: tuple[float, float]
    timescale_ci95: tuple[float, float]
    sse: float
    aic: float
    n_points: int
    converged: bool
    failed: bool = False
    message: str = ""
    bootstrap_ci95: tuple[float, float] | None = None

    def predict(self, t: np.ndarray) -> np.ndarray:
        y, _ = _model_and_jac(self.model, np.asarray(t, dtype=float),
                              np.array([self.amplitude, self.timescale_s]))
        return y


def _failed_fit(model: str, n: int, message: str) -> LifetimeFit:
    nan = float("nan")
    return LifetimeFit(model=model, amplitude=nan, timescale_s=nan,
                       amplitude_sigma=nan, timescale_sigma=nan,
                       amplitude_ci95=(nan, nan), timescale_ci95=(nan, nan),
                       sse=nan, aic=nan, n_points=n, converged=False,
                       failed=True, message=message)


def _initial_guess(model: str, t: np.ndarray, y: np.ndarray) -> np.ndarray:
    a0 = max(float(y.max()), 1e-12)
    positive = y > a0 * 1e-6
    if positive.sum() >= 2:
        # log-linear regression against t (exponential) or t^2 (gaussian)
        x = t[positive] if model == "exponential" else t[positive] ** 2
        slope = np.polyfit(x, np.log(y[positive]), 1)[0]
        if slope < 0:
            scale0 = -1.0 / slope if model == "exponential" \
                else float(np.sqrt(-1.0 / slope))
        else:
            scale0 = float(t[-1] - t[0])
    else:
        scale0 = float(t[-1] - t[0])
    return np.array([a0, max(scale0, 1e-3 * (t[-1] - t[0] + 1e-30))])


def fit_lifetime(series: LifetimeSeries, model: str = "exponential",
                 bootstrap: int = 0, seed: int = 0) -> LifetimeFit:
    """Fit one decay model; see module docstring for the CI convention."""
    if model not in _MODELS:
        raise ValueError(f"model must be one of {_MODELS}")
    t = series.hold_time_s
    y = series.efficiency
    n = t.size
    if n < 3:
        raise ValueError("need at least three points to fit two parameters")
    if np.ptp(y) == 0:
        return _failed_fit(model, n,
                           "degenerate series: efficiencies are constant, "
                           "decay time unidentifiable")
    w = np.ones_like(y) if series.uncertainty is None \
        else 1.0 / series.uncertainty

    def residuals(p):
        ym, _ = _model_and_jac(model, t, p)
        return (ym - y) * w

    def jacobian(p):
        _, jac = _model_and_jac(model, t, p)
        return jac * w[:, None]

    p0 = _initial_guess(model, t, y)
    sol = optimize.least_squares(residuals, p0, jac=jacobian, method="lm",
                                 xtol=1e-14, ftol=1e-14, gtol=1e-14,
                                 max_nfev=2000)
    a_hat, scale_hat = sol.x
    res = residuals(sol.x)
    sse = float(res @ res)
    dof = n - 2
    jac = jacobian(sol.x)
    try:
        cov = np.linalg.inv(jac.T @ jac) * (sse / dof if dof > 0 else np.nan)
    except np.linalg.LinAlgError:
        return _failed_fit(model, n, "singular Jacobian: parameters "
                                     "unidentifiable for this series")
    sigma = np.sqrt(np.clip(np.diag(cov), 0, None))
    tq = float(stats.t.ppf(0.975, dof)) if dof > 0 else float("nan")
    aic = n * np.log(max(sse, 1e-300) / n) + 2 * 2

    boot_ci = None
    if bootstrap > 0:
        rng = np.random.default_rng(seed)
        y_fit, _ = _model_and_jac(model, t, sol.x)
        raw = y - y_fit
        draws = []
        for _ in range(bootstrap):
            y_b = y_fit + rng.choice(raw, size=n, replace=True)
            if np.ptp(y_b) == 0:
                continue
            def res_b(p, y_b=y_b):
                ym, _ = _model_and_jac(model, t, p)
                return (ym - y_b) * w
            try:
                sb = optimize.least_squares(res_b, sol.x, method="lm",
                                            max_nfev=500)
                if sb.x[1] > 0:
                    draws.append(sb.x[1])
            except Exception:
                continue
        if len(draws) >= max(10, bootstrap // 5):
            lo, hi = np.percentile(draws, [2.5, 97.5])
            boot_ci = (float(lo), float(hi))

    return LifetimeFit(
        model=model,
        amplitude=float(a_hat),
        timescale_s=float(scale_hat),
        amplitude_sigma=float(sigma[0]),
        timescale_sigma=float(sigma[1]),
        amplitude_ci95=(float(a_hat - tq * sigma[0]),
                        float(a_hat + tq * sigma[0])),
        timescale_ci95=(float(scale_hat - tq * sigma[1]),
                        float(scale_hat + tq * sigma[1])),
        sse=sse,
        aic=float(aic),
        n_points=n,
        converged=bool(sol.success),
        bootstrap_ci95=boot_ci,
    )


def select_model(series: LifetimeSeries,
                 models: tuple[str, ...] = _MODELS) -> LifetimeFit:
    """Fit the candidate models and return the one with lower AIC."""
    fits = [fit_lifetime(series, m) for m in models]
    usable = [f for f in fits if not f.failed]
    if not usable:
        return fits[0]
    return min(usable, key=lambda f: f.aic)


def make_synthetic_series(model: str, amplitude: float, timescale_s: float,
                          hold_times_s, noise_sigma: float = 0.0,
                          seed: int = 0) -> LifetimeSeries:
    """Synthetic decay series with optional Gaussian noise, for studies."""
    t = np.asarray(hold_times_s, dtype=float)
    y, _ = _model_and_jac(model, t, np.array([amplitude, timescale_s]))
    sigma = None
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        y = y + rng.normal(0.0, noise_sigma, size=t.shape)
        sigma = np.full(t.shape, noise_sigma)
    return LifetimeSeries(t, y, sigma)


def series_to_csv(series: LifetimeSeries,
                  path: str | Path | None = None) -> str:
    buf = io.StringIO()
    buf.write("hold_time_s,efficiency,uncertainty\n")
    sigma = series.uncertainty
    for i in range(series.n_points):
        s = "" if sigma is None else repr(float(sigma[i]))
        buf.write(f"{float(series.hold_time_s[i])!r},"
                  f"{float(series.efficiency[i])!r},{s}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def series_from_csv(path: str | Path) -> LifetimeSeries:
    rows = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not rows or rows[0].strip() != "hold_time_s,efficiency,uncertainty":
        raise ValueError("expected header 'hold_time_s,efficiency,uncertainty'")
    t, y, sig = [], [], []
    for row in rows[1:]:
        parts = row.split(",")
        t.append(float(parts[0]))
        y.append(float(parts[1]))
        if len(parts) > 2 and parts[2].strip():
            sig.append(float(parts[2]))
    sigma = np.array(sig) if len(sig) == len(t) and sig else None
    return LifetimeSeries(np.array(t), np.array(y), sigma)
