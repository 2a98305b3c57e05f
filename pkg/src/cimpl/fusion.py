"""Local DOAs per pair and their fusion into one full-circle azimuth.

Azimuths are radians, zero in the look direction, positive to the left.
Monaural DOAs live on [0, pi] (0 = front endfire), the binaural DOA on
[-pi/2, pi/2]. The binaural sign picks the closer ear, whose monaural
estimate decides front versus back; both are then compared with a
chi-square test for a common mean and either merged or the more reliable
one is kept.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .cimp import R_FLOOR

# Upper quantiles of the chi-square distribution with one degree of freedom.
CHI2_1_UPPER = {0.01: 6.634896601021214, 0.05: 3.841458820694124, 0.1: 2.705543454095404}

TIE_BREAKS = ("binaural", "monaural")

_HALF_PI = 0.5 * math.pi
_TWO_PI = 2.0 * math.pi
_DELTA_TINY = 1e-12


def wrap(x: float) -> float:
    """Wrap a scalar angle to [-pi, pi)."""
    if -math.pi <= x < math.pi:
        return x
    w = math.fmod(x + math.pi, _TWO_PI)
    if w < 0.0:
        w += _TWO_PI
    w -= math.pi
    return -math.pi if w >= math.pi else w


class Source(enum.Enum):
    MONAURAL_LEFT = "monaural_left"
    MONAURAL_RIGHT = "monaural_right"
    BINAURAL = "binaural"


class Mode(enum.Enum):
    COMMON_MEAN = "common_mean"
    MONAURAL_ONLY = "monaural_only"
    BINAURAL_ONLY = "binaural_only"
    INVALID = "invalid"


@dataclass
class LocalDoa:
    source: Source
    phi: float
    variance: float
    R: float
    dispersion: float
    clamped: bool = False


@dataclass
class FusedDoa:
    frame: int
    varphi: float
    R: float
    dispersion: float
    mode: Mode
    clamped: bool = False

    @property
    def valid(self) -> bool:
        return self.mode is not Mode.INVALID


def reliability_from_variance(variance: float, r_floor: float = R_FLOOR) -> tuple[float, float]:
    """``(R, delta)`` of a wrapped normal with the given variance."""
    if not math.isfinite(variance):
        return 0.0, math.inf
    R = math.exp(-0.5 * variance)
    if R <= r_floor:
        return R, math.inf
    R2 = R * R
    return R, max((1.0 - R2 * R2) / (2.0 * R2), 0.0)


def resultant_from_dispersion(delta: float) -> float:
    if math.isinf(delta):
        return 0.0
    return 1.0 / math.sqrt(delta + math.sqrt(1.0 + delta * delta))


def monaural_doa(tau: float, var_tau: float, d: float, c: float,
                 source: Source = Source.MONAURAL_LEFT, r_floor: float = R_FLOOR) -> Optional[LocalDoa]:
    """``phi = arccos(c tau / d)`` with variance ``(c / d)^2 var(tau)``.

    The arccos argument is clamped to [-1, 1]; ``clamped`` records it.
    Returns None for an invalid (NaN) delay.
    """
    if not (math.isfinite(tau) and math.isfinite(var_tau)):
        return None
    u = c * tau / d
    clamped = abs(u) > 1.0
    phi = math.acos(min(1.0, max(-1.0, u)))
    var = (c / d) ** 2 * var_tau
    R, delta = reliability_from_variance(var, r_floor)
    return LocalDoa(source, phi, var, R, delta, clamped)


def binaural_doa(tau: float, var_tau: float, d: float, c: float,
                 r_floor: float = R_FLOOR) -> Optional[LocalDoa]:
    """``phi = c tau / d`` radians, clamped to [-pi/2, pi/2]; positive is left."""
    if not (math.isfinite(tau) and math.isfinite(var_tau)):
        return None
    phi = c * tau / d
    clamped = abs(phi) > _HALF_PI
    phi = min(_HALF_PI, max(-_HALF_PI, phi))
    var = (c / d) ** 2 * var_tau
    R, delta = reliability_from_variance(var, r_floor)
    return LocalDoa(Source.BINAURAL, phi, var, R, delta, clamped)


def closer_side(phi_b: float) -> Source:
    return Source.MONAURAL_LEFT if phi_b >= 0.0 else Source.MONAURAL_RIGHT


def lift_to_full_circle(phi_left: Optional[float], phi_right: Optional[float],
                        phi_b: float) -> tuple[Optional[float], float]:
    """Map local DOAs onto [-pi, pi).

    The binaural sign selects the monaural pair of the closer ear; the left
    pair maps to ``phi_left`` and the right pair to ``-phi_right``. That
    estimate decides whether the source is behind, in which case the
    binaural angle is reflected about the interaural axis. When the closer
    ear's estimate is missing the monaural output is None and the binaural
    angle is taken as frontal.
    """
    if phi_b >= 0.0:
        varphi_m = None if phi_left is None else wrap(phi_left)
    else:
        varphi_m = None if phi_right is None else wrap(-phi_right)
    if varphi_m is None or abs(varphi_m) <= _HALF_PI:
        return varphi_m, wrap(phi_b)
    if varphi_m > 0.0:
        return varphi_m, wrap(math.pi - phi_b)
    return varphi_m, wrap(-math.pi - phi_b)


def common_mean_statistic(varphi_m: float, delta_m: float, varphi_b: float, delta_b: float) -> float:
    """Weighted common-mean statistic Y (chi-square with one dof under H0)."""
    km = math.sin(varphi_m) ** 2 / max(delta_m, _DELTA_TINY)
    kb = math.cos(varphi_b) ** 2 / max(delta_b, _DELTA_TINY)
    C = km * math.cos(varphi_m) + kb * math.cos(varphi_b)
    S = km * math.sin(varphi_m) + kb * math.sin(varphi_b)
    return max(0.0, 2.0 * ((km + kb) - math.hypot(C, S)))


def common_mean_test(varphi_m: float, delta_m: float, varphi_b: float, delta_b: float,
                     alpha: float = 0.1) -> tuple[bool, float]:
    """Return ``(accepted, Y)``; H0 is accepted when Y is at most the chi2_1 quantile."""
    try:
        threshold = CHI2_1_UPPER[alpha]
    except KeyError:
        raise ValueError(f"alpha must be one of {sorted(CHI2_1_UPPER)}, got {alpha}") from None
    Y = common_mean_statistic(varphi_m, delta_m, varphi_b, delta_b)
    return Y <= threshold, Y


def fuse_common_mean(varphi_m: float, R_m: float, delta_m: float,
                     varphi_b: float, R_b: float, delta_b: float) -> Optional[tuple[float, float, float]]:
    """Weighted common mean direction, its dispersion and resultant length.

    Returns None when both weights vanish (e.g. monaural at endfire and
    binaural at the interaural axis), in which case nothing can be merged.
    """
    dm = max(delta_m, _DELTA_TINY)
    db = max(delta_b, _DELTA_TINY)
    if R_m <= 0.0 or R_b <= 0.0:
        return None
    am = math.sin(varphi_m) ** 2 / (R_m * dm)
    ab = math.cos(varphi_b) ** 2 / (R_b * db)
    total = am + ab
    if not total > 0.0 or not math.isfinite(total):
        return None
    w1, w2 = am / total, ab / total
    x = w1 * R_m * math.cos(varphi_m) + w2 * R_b * math.cos(varphi_b)
    y = w1 * R_m * math.sin(varphi_m) + w2 * R_b * math.sin(varphi_b)
    varphi = wrap(math.atan2(y, x))
    delta = 2.0 * (w1 * w1 * R_m * R_m * dm + w2 * w2 * R_b * R_b * db) / (w1 * R_m + w2 * R_b) ** 2
    return varphi, delta, resultant_from_dispersion(delta)


def fuse_reject(varphi_m: float, R_m: float, delta_m: float,
                varphi_b: float, R_b: float, delta_b: float,
                tie_break: str = "binaural") -> tuple[float, float, float, Mode]:
    """Keep the branch with the smaller dispersion."""
    if delta_m < delta_b or (delta_m == delta_b and tie_break == "monaural"):
        return varphi_m, R_m, delta_m, Mode.MONAURAL_ONLY
    return varphi_b, R_b, delta_b, Mode.BINAURAL_ONLY


def fuse_frame(left: Optional[LocalDoa], right: Optional[LocalDoa], binaural: Optional[LocalDoa],
               frame: int = 0, alpha: float = 0.1, tie_break: str = "binaural") -> FusedDoa:
    """Full fusion of one frame's local DOAs."""
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
    if binaural is None or math.isinf(binaural.dispersion):
        # no side information without the binaural pair
        return FusedDoa(frame, math.nan, 0.0, math.inf, Mode.INVALID)

    closer = left if closer_side(binaural.phi) is Source.MONAURAL_LEFT else right
    varphi_m, varphi_b = lift_to_full_circle(
        None if left is None else left.phi,
        None if right is None else right.phi,
        binaural.phi,
    )
    clamped = binaural.clamped
    if varphi_m is None or math.isinf(closer.dispersion):
        return FusedDoa(frame, varphi_b, binaural.R, binaural.dispersion, Mode.BINAURAL_ONLY, clamped)
    clamped = clamped or closer.clamped

    accepted, _ = common_mean_test(varphi_m, closer.dispersion, varphi_b, binaural.dispersion, alpha)
    if accepted:
        merged = fuse_common_mean(varphi_m, closer.R, closer.dispersion,
                                  varphi_b, binaural.R, binaural.dispersion)
        if merged is not None:
            varphi, delta, R = merged
            return FusedDoa(frame, varphi, R, delta, Mode.COMMON_MEAN, clamped)
    varphi, R, delta, mode = fuse_reject(varphi_m, closer.R, closer.dispersion,
                                         varphi_b, binaural.R, binaural.dispersion, tie_break)
    return FusedDoa(frame, varphi, R, delta, mode, clamped)
