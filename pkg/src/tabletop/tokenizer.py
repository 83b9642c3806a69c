"""Discrete action codec: per-dimension normalization into 1,024 uniform bins.

Encoding floors the normalized value into a bin (clamping the upper boundary);
decoding reconstructs the bin center, so the worst-case round-trip error is
half a bin width per dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

from .world import Action

CODEC_VERSION = "pickplace-xyyaw-1024-v1"


class TokenizerError(Exception):
    pass


@dataclass(frozen=True)
class ActionCodec:
    bins: int = 1024
    x_range: tuple[float, float] = (0.0, 1.0)
    y_range: tuple[float, float] = (0.0, 0.5)
    yaw_range: tuple[float, float] = (-math.pi, math.pi)
    version: str = CODEC_VERSION

    # Token layout: (pick.x, pick.y, pick.yaw, place.x, place.y, place.yaw).
    @property
    def layout(self) -> tuple[str, ...]:
        return ("pick.x", "pick.y", "pick.yaw", "place.x", "place.y", "place.yaw")

    def _ranges(self) -> list[tuple[float, float]]:
        return [self.x_range, self.y_range, self.yaw_range] * 2

    def encode_value(self, value: float, lo: float, hi: float, name: str) -> int:
        if not lo <= value <= hi:
            raise TokenizerError(f"{name} value {value} outside range [{lo}, {hi}]")
        norm = (value - lo) / (hi - lo)
        return min(self.bins - 1, int(norm * self.bins))

    def decode_value(self, token: int, lo: float, hi: float, name: str) -> float:
        if not 0 <= token < self.bins:
            raise TokenizerError(f"{name} token {token} outside [0, {self.bins - 1}]")
        return lo + (token + 0.5) / self.bins * (hi - lo)

    def encode(self, action: Action) -> list[int]:
        values = action.as_list()
        return [
            self.encode_value(v, lo, hi, name)
            for v, (lo, hi), name in zip(values, self._ranges(), self.layout)
        ]

    def decode(self, tokens: list[int]) -> Action:
        if len(tokens) != len(self.layout):
            raise TokenizerError(f"expected {len(self.layout)} tokens, got {len(tokens)}")
        values = [
            self.decode_value(t, lo, hi, name)
            for t, (lo, hi), name in zip(tokens, self._ranges(), self.layout)
        ]
        return Action.from_list(values)

    def quantize(self, action: Action) -> Action:
        """Snap an action to its bin centers (decode of encode)."""
        return self.decode(self.encode(action))

    def half_bin_widths(self) -> list[float]:
        return [(hi - lo) / (2 * self.bins) for lo, hi in self._ranges()]

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "bins": self.bins,
            "layout": list(self.layout),
            "ranges": {
                "x": list(self.x_range),
                "y": list(self.y_range),
                "yaw": list(self.yaw_range),
            },
        }

    @staticmethod
    def from_json(data: dict) -> "ActionCodec":
        return ActionCodec(
            bins=int(data["bins"]),
            x_range=tuple(data["ranges"]["x"]),
            y_range=tuple(data["ranges"]["y"]),
            yaw_range=tuple(data["ranges"]["yaw"]),
            version=data["version"],
        )
