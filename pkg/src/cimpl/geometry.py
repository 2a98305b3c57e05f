"""Array geometry for a pair of two-microphone hearing aids.

Coordinate frame: x points in the look direction, y points to the
listener's left, z up. Azimuth is measured from +x towards +y, so a
positive azimuth means the source is on the left.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class PairId(enum.Enum):
    LEFT_MONAURAL = "left"
    RIGHT_MONAURAL = "right"
    BINAURAL = "binaural"


# Roles of the four microphones, in the order used by ``channel_map``.
ROLES = ("left_front", "left_rear", "right_front", "right_rear")


@dataclass(frozen=True)
class ArrayGeometry:
    """Spacings of the four-microphone binaural array.

    ``channel_map`` gives the audio channel index of each role in
    :data:`ROLES` order.
    """

    d_left: float = 0.012
    d_right: float = 0.012
    d_binaural: float = 0.16
    c: float = 343.0
    channel_map: tuple[int, int, int, int] = (0, 1, 2, 3)

    def __post_init__(self):
        object.__setattr__(self, "channel_map", tuple(int(i) for i in self.channel_map))
        for name in ("d_left", "d_right", "d_binaural"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (self.d_binaural > self.d_left and self.d_binaural > self.d_right):
            raise ValueError("binaural spacing must exceed both monaural spacings")
        if not 300.0 <= self.c <= 360.0:
            raise ValueError(f"speed of sound {self.c} outside [300, 360] m/s")
        if len(self.channel_map) != 4 or len(set(self.channel_map)) != 4:
            raise ValueError("channel_map needs four distinct channel indices")
        if min(self.channel_map) < 0:
            raise ValueError("channel indices must be non-negative")

    def spacing(self, pair: PairId) -> float:
        return {
            PairId.LEFT_MONAURAL: self.d_left,
            PairId.RIGHT_MONAURAL: self.d_right,
            PairId.BINAURAL: self.d_binaural,
        }[pair]

    def ambiguity_frequency(self, pair: PairId) -> float:
        """Frequency c / (2 d) above which the pair's phase difference wraps."""
        return self.c / (2.0 * self.spacing(pair))

    def pair_channels(self, pair: PairId) -> tuple[int, int]:
        """Audio channels (a, b) whose phase difference arg(Xa conj(Xb)) is used.

        Monaural pairs are front minus rear; the binaural pair is left front
        minus right front.
        """
        lf, lr, rf, rr = self.channel_map
        return {
            PairId.LEFT_MONAURAL: (lf, lr),
            PairId.RIGHT_MONAURAL: (rf, rr),
            PairId.BINAURAL: (lf, rf),
        }[pair]

    @property
    def n_channels_required(self) -> int:
        return max(self.channel_map) + 1

    def mic_positions(self) -> np.ndarray:
        """Microphone positions in meters, shape (4, 3), rows in ROLES order.

        The two devices sit at y = +-d_binaural / 2, each with its front and
        rear microphone at x = +-d / 2.
        """
        yb = self.d_binaural / 2.0
        return np.array(
            [
                [self.d_left / 2.0, yb, 0.0],
                [-self.d_left / 2.0, yb, 0.0],
                [self.d_right / 2.0, -yb, 0.0],
                [-self.d_right / 2.0, -yb, 0.0],
            ]
        )
