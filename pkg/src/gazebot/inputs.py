"""Per-button activation accumulators with saturation and Schmitt hysteresis.

Every frame each button's activation rises by dt/T while its zone is being
fixated and falls by the same amount otherwise, clamped to [0, 1] - the
rolling-average analogue of a dwell timer. A two-threshold trigger converts
the level into a debounced active/inactive status: strictly above a_on
switches on, strictly below a_off switches off, and nothing changes inside
the [a_off, a_on] band.

The accumulator is stored as dwell-milliseconds and divided by T only when
read, so with integer frame periods the level is exact: at 50 Hz and
T = 1000 ms the level after 40 frames is exactly 0.8, not 0.8 + rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

ACTIVE = "active"
INACTIVE = "inactive"

ACTIVATED = "activated"
DEACTIVATED = "deactivated"

# Defaults: dwell window for discrete (single-shot) buttons, acceleration
# ramp for continuous (velocity) buttons.
DISCRETE_PROFILE_T_MS = 1000.0
DISCRETE_ON = 0.8
DISCRETE_OFF = 0.8
CONTINUOUS_PROFILE_T_MS = 300.0
CONTINUOUS_ON = 0.4
CONTINUOUS_OFF = 0.2


class ClockError(ValueError):
    """Frame timestamps must be monotone."""


@dataclass(frozen=True)
class ActivationProfile:
    """Accumulation period T (ms) and the Schmitt thresholds."""

    period_ms: float
    a_on: float
    a_off: float
    kind: str  # "discrete" | "continuous"

    def __post_init__(self) -> None:
        if self.period_ms <= 0:
            raise ValueError("accumulation period must be positive")
        if not (0.0 <= self.a_off <= self.a_on <= 1.0) or self.a_on <= 0.0:
            raise ValueError("thresholds must satisfy 0 <= a_off <= a_on <= 1, a_on > 0")

    @staticmethod
    def discrete(period_ms: float = DISCRETE_PROFILE_T_MS) -> "ActivationProfile":
        return ActivationProfile(period_ms, DISCRETE_ON, DISCRETE_OFF, "discrete")

    @staticmethod
    def continuous(period_ms: float = CONTINUOUS_PROFILE_T_MS) -> "ActivationProfile":
        return ActivationProfile(period_ms, CONTINUOUS_ON, CONTINUOUS_OFF, "continuous")


@dataclass(frozen=True)
class ButtonState:
    button_id: str
    dwell_ms: float  # clamped to [0, period]; activation = dwell_ms / period
    status: str
    last_t: float

    def activation(self, profile: ActivationProfile) -> float:
        return self.dwell_ms / profile.period_ms


@dataclass(frozen=True)
class InputEvent:
    button_id: str
    edge: str  # "activated" | "deactivated"
    t: float  # ms


@dataclass(frozen=True)
class ActivationSnapshot:
    """Immutable per-frame view: (button_id, activation, status) triples."""

    t: float
    entries: tuple[tuple[str, float, str], ...]

    def activation_of(self, button_id: str) -> float:
        for bid, a, _ in self.entries:
            if bid == button_id:
                return a
        return 0.0

    def status_of(self, button_id: str) -> str:
        for bid, _, status in self.entries:
            if bid == button_id:
                return status
        return INACTIVE


class InputPipeline:
    """Owns the mutable accumulator states; stepped by a single frame loop."""

    def __init__(self, profiles: dict[str, ActivationProfile], t0: float = 0.0):
        self.profiles = dict(profiles)
        self.states: dict[str, ButtonState] = {
            bid: ButtonState(bid, 0.0, INACTIVE, t0) for bid in sorted(profiles)
        }

    def step(self, hits: set[str], t_now: float) -> list[InputEvent]:
        """Advance every accumulator to t_now; hits name the fixated buttons.

        Buttons whose zones were invisible this frame must simply be absent
        from hits: invisible means not fixatable, so the level decays.
        """
        events: list[InputEvent] = []
        for bid in sorted(self.states):
            state = self.states[bid]
            profile = self.profiles[bid]
            dt = t_now - state.last_t
            if dt < 0:
                raise ClockError(f"frame at t={t_now} ms precedes state at t={state.last_t} ms")
            dwell = state.dwell_ms + dt if bid in hits else state.dwell_ms - dt
            dwell = min(max(dwell, 0.0), profile.period_ms)
            a = dwell / profile.period_ms
            status = state.status
            if a > profile.a_on:
                status = ACTIVE
            elif a < profile.a_off:
                status = INACTIVE
            if status != state.status:
                events.append(InputEvent(bid, ACTIVATED if status == ACTIVE else DEACTIVATED, t_now))
            self.states[bid] = replace(state, dwell_ms=dwell, status=status, last_t=t_now)
        return events

    def snapshot(self) -> ActivationSnapshot:
        entries = tuple(
            (bid, self.states[bid].activation(self.profiles[bid]), self.states[bid].status)
            for bid in sorted(self.states)
        )
        t = max((s.last_t for s in self.states.values()), default=0.0)
        return ActivationSnapshot(t=t, entries=entries)
