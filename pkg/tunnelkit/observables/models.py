"""
Decay-rate extraction, Γ-μ fitting and regime classification
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from lmfit import Minimizer, Parameters
from sklearn.metrics import r2_score

from tunnelkit.config.config import logger
from tunnelkit.utils.errors import FitError

SPILL = 'spill'
TUNNELING = 'tunneling'
BACKGROUND = 'background'

# Spread of the independently measured background rate, s^-1
SIGMA_BG = 0.02
SUSTAIN_SAMPLES = 3
WINDOW = 5


@dataclass(frozen=True)
class TimeSeries:
    """Samples of one quantity against strictly increasing times in ms"""
    times: np.ndarray
    values: np.ndarray
    kind: str = 'N'

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError(f"times and values must be 1D and of equal length, "
                             f"got {times.shape} and {values.shape}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("TimeSeries timestamps must be strictly increasing")
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return len(self.times)

    def at(self, times) -> np.ndarray:
        """Linear interpolation onto other times"""
        return np.interp(times, self.times, self.values)

    def to_rows(self) -> List[Tuple[float, float]]:
        return list(zip(self.times.tolist(), self.values.tolist()))


def decay_rate(series: TimeSeries) -> TimeSeries:
    """Γ = -d ln N/dt in s^-1 from 5-point parabolas centred on each interior sample"""
    if len(series) < WINDOW:
        raise ValueError(f"decay_rate needs at least {WINDOW} samples, got {len(series)}")
    if np.any(series.values <= 0):
        raise ValueError("decay_rate needs strictly positive N")
    log_n = np.log(series.values)
    half = WINDOW // 2
    centres = range(half, len(series) - half)
    rates = []
    for i in centres:
        t = series.times[i - half:i + half + 1] - series.times[i]
        coeffs = np.polyfit(t, log_n[i - half:i + half + 1], 2)
        # slope in ms^-1 at the centre
        rates.append(-coeffs[1] * 1e3)
    return TimeSeries(series.times[half:len(series) - half], rates, kind='gamma')


def align(gammas: TimeSeries, mus: TimeSeries) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Γ samples with μ interpolated onto their times"""
    inside = (gammas.times >= mus.times[0] - 1e-9) & (gammas.times <= mus.times[-1] + 1e-9)
    if not inside.all():
        raise ValueError("Γ series extends beyond the μ series")
    return gammas.times, gammas.values, mus.at(gammas.times)


@dataclass
class DecayFit:
    """Fit of Γ = Γ_bg + exp(α + βμ); β in nK^-1, rates in s^-1"""
    gamma_bg: float
    alpha: float
    beta: float
    alpha_stderr: Optional[float]
    beta_stderr: Optional[float]
    covariance: Optional[np.ndarray]
    residual_norm: float
    used: np.ndarray
    r_squared: float = float('nan')
    gamma_bg_stderr: Optional[float] = None
    free_background: bool = False
    domain: str = 'linear'

    def predict(self, mu) -> np.ndarray:
        return self.gamma_bg + np.exp(self.alpha + self.beta * np.asarray(mu, dtype=float))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'gamma_bg': self.gamma_bg,
            'gamma_bg_stderr': self.gamma_bg_stderr,
            'alpha': self.alpha,
            'alpha_stderr': self.alpha_stderr,
            'beta': self.beta,
            'beta_stderr': self.beta_stderr,
            'covariance': None if self.covariance is None else self.covariance.tolist(),
            'residual_norm': self.residual_norm,
            'points_used': int(np.count_nonzero(self.used)),
            'r_squared': self.r_squared,
            'free_background': self.free_background,
            'domain': self.domain,
        }


def _residual(params, mu, gamma, domain):
    model = params['gamma_bg'] + np.exp(params['alpha'] + params['beta'] * mu)
    if domain == 'log':
        return np.log(model) - np.log(gamma)
    return model - gamma


def _initial_guess(mu: np.ndarray, gamma: np.ndarray, gamma_bg: float) -> Tuple[float, float]:
    excess = gamma - gamma_bg
    positive = excess > 0
    if np.count_nonzero(positive) >= 2 and np.ptp(mu[positive]) > 0:
        beta, alpha = np.polyfit(mu[positive], np.log(excess[positive]), 1)
        return float(alpha), float(beta)
    return float(np.log(max(np.mean(np.abs(excess)), 1e-12))), 0.1


def fit_gamma_mu(gammas: TimeSeries, mus: TimeSeries, gamma_bg: float, u_s: float,
                 free_background: bool = False, domain: str = 'linear',
                 min_points: int = 4) -> DecayFit:
    """Least-squares fit of Γ(μ) over the samples with μ <= U_s

    Γ_bg is held fixed unless `free_background` is set. `domain` selects
    residuals on Γ ('linear', uniform weights) or on ln Γ ('log').
    """
    if domain not in ('linear', 'log'):
        raise ValueError(f"Unknown fit domain '{domain}'")
    _, gamma, mu = align(gammas, mus)
    used = np.isfinite(gamma) & np.isfinite(mu) & (mu <= u_s)
    if domain == 'log':
        used &= gamma > 0
    if np.count_nonzero(used) < min_points:
        raise FitError(f"Only {np.count_nonzero(used)} samples with μ <= U_s={u_s:.2f} nK; "
                       f"need at least {min_points}")
    mu_fit, gamma_fit = mu[used], gamma[used]

    alpha0, beta0 = _initial_guess(mu_fit, gamma_fit, gamma_bg)
    params = Parameters()
    params.add('gamma_bg', value=gamma_bg, vary=free_background)
    params.add('alpha', value=alpha0)
    params.add('beta', value=beta0)

    minimizer = Minimizer(_residual, params, fcn_args=(mu_fit, gamma_fit, domain))
    try:
        result = minimizer.leastsq(max_nfev=20000, xtol=1e-12, ftol=1e-12)
    except (ValueError, FloatingPointError) as e:
        raise FitError(f"Γ-μ fit failed: {e}")
    if not result.success:
        raise FitError(f"Γ-μ fit did not converge: {result.message}")

    best = result.params
    beta = best['beta'].value
    if not np.isfinite(beta):
        raise FitError("Γ-μ fit returned a non-finite β")
    if best['beta'].stderr is None:
        logger.warning("Γ-μ fit covariance could not be estimated")

    background = best['gamma_bg'].value
    excess = gamma_fit - background
    positive = excess > 0
    r_squared = float('nan')
    if np.count_nonzero(positive) >= 2:
        r_squared = float(r2_score(np.log(excess[positive]),
                                   best['alpha'].value + beta * mu_fit[positive]))

    return DecayFit(
        gamma_bg=background,
        alpha=best['alpha'].value,
        beta=beta,
        alpha_stderr=best['alpha'].stderr,
        beta_stderr=best['beta'].stderr,
        covariance=result.covar,
        residual_norm=float(np.sqrt(np.sum(result.residual ** 2))),
        used=used,
        r_squared=r_squared,
        gamma_bg_stderr=best['gamma_bg'].stderr if free_background else None,
        free_background=free_background,
        domain=domain,
    )


@dataclass
class RegimeLabels:
    """Per-sample regime tags and the transition times (ms) between them"""
    times: np.ndarray
    labels: Tuple[str, ...]
    spill_to_tunneling: Optional[float] = None
    tunneling_to_background: Optional[float] = None

    def count(self, label: str) -> int:
        return sum(1 for item in self.labels if item == label)

    def mask(self, label: str) -> np.ndarray:
        return np.array([item == label for item in self.labels], dtype=bool)

    def to_rows(self) -> List[Tuple[float, str]]:
        return list(zip(self.times.tolist(), self.labels))


def classify_regimes(gammas: TimeSeries, mus: TimeSeries, u_s: float, gamma_bg: float,
                     sigma_bg: float = SIGMA_BG, sustain: int = SUSTAIN_SAMPLES) -> RegimeLabels:
    """Tag samples as spill (μ > U_s), background (|Γ - Γ_bg| < 2σ) or tunneling"""
    times, gamma, mu = align(gammas, mus)
    labels = []
    for g, m in zip(gamma, mu):
        if m > u_s:
            labels.append(SPILL)
        elif abs(g - gamma_bg) < 2.0 * sigma_bg:
            labels.append(BACKGROUND)
        else:
            labels.append(TUNNELING)

    below = np.flatnonzero(mu <= u_s)
    spill_end = float(times[below[0]]) if below.size and below[0] > 0 else None

    background_start = None
    run = 0
    for i, label in enumerate(labels):
        run = run + 1 if label == BACKGROUND else 0
        if run == sustain:
            background_start = float(times[i - sustain + 1])
            break

    return RegimeLabels(times, tuple(labels), spill_end, background_start)
