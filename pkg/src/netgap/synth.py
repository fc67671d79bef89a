"""Deterministic synthetic measurement cohorts for desk-scale validation.

A generated household has a fixed access plan level (placed well inside its
speed tier so ±3% measurement noise cannot cross a bin edge) and a fixed
wireless capacity drawn uniformly from a configured band. Access tests run
hourly with small jitter; wireless tests arrive irregularly, a few hours
apart, mimicking tests that only happen while a device is in use.

Optionally a household's plan steps to a new level exactly at a 6-hour
window boundary mid-period, always by a factor of at least 2, which the
change detector must find. Byte counts are generated first and throughput
derived from them, so every sample satisfies the consistency invariant
exactly. Same spec and seed, same samples, byte for byte.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timezone

from .model import PATH_LAN_WIFI, PATH_WAN_ACCESS, ThroughputSample
from .store import SampleStore

SYNTH_TOOL = "synthetic"

# One representative plan level per tier, kept far from both bin edges.
TIER_LEVELS_MBPS = {
    "<50": 35.0,
    "50-100": 75.0,
    "100-200": 150.0,
    "200-400": 300.0,
    "400-800": 550.0,
    ">800": 900.0,
}

_DEFAULT_START = datetime(2022, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class CohortSpec:
    households: int = 52
    households_with_change: int = 13
    period_days: int = 28
    start_utc: datetime = _DEFAULT_START
    seed: int = 1
    wifi_floor_mbps: float = 80.0
    wifi_cap_mbps: float = 600.0
    noise_fraction: float = 0.03
    wan_interval_seconds: float = 3600.0
    wan_jitter_seconds: float = 300.0
    wifi_min_gap_seconds: float = 7200.0
    wifi_max_gap_seconds: float = 28800.0

    def validate(self) -> None:
        if self.households < 1:
            raise ValueError("households must be at least 1")
        if not (0 <= self.households_with_change <= self.households):
            raise ValueError("households_with_change must lie in [0, households]")
        if self.period_days < 2:
            raise ValueError("period_days must be at least 2")
        if self.start_utc.tzinfo is None:
            raise ValueError("start_utc must be timezone-aware")
        if int(self.start_utc.timestamp()) % 21600 != 0:
            raise ValueError("start_utc must fall on a 6-hour UTC boundary")
        if not (0 < self.wifi_floor_mbps < self.wifi_cap_mbps):
            raise ValueError("need 0 < wifi_floor_mbps < wifi_cap_mbps")
        if not (0 <= self.noise_fraction < 0.5):
            raise ValueError("noise_fraction must lie in [0, 0.5)")
        if self.wan_interval_seconds <= 0:
            raise ValueError("wan_interval_seconds must be positive")
        if self.wan_jitter_seconds < 0:
            raise ValueError("wan_jitter_seconds must be nonnegative")
        if not (0 < self.wifi_min_gap_seconds <= self.wifi_max_gap_seconds):
            raise ValueError("need 0 < wifi_min_gap_seconds <= wifi_max_gap_seconds")


def _changed_level(level: float) -> float:
    # Step by a factor of 2, downward only when doubling would leave the
    # modeled plan range.
    return level * 2 if level * 2 <= 900.0 else level / 2


def _noisy(rng: random.Random, level: float, noise: float) -> float:
    return level * (1.0 + rng.uniform(-noise, noise))


def _sample_at(
    rng: random.Random,
    spec: CohortSpec,
    household_id: str,
    device_id: str,
    path: str,
    epoch_seconds: float,
    level_mbps: float,
) -> ThroughputSample:
    mbps = _noisy(rng, level_mbps, spec.noise_fraction)
    duration = rng.uniform(9.5, 10.5)
    nbytes = max(1, round(mbps * 1e6 / 8 * duration))
    ts = datetime.fromtimestamp(round(epoch_seconds, 6), tz=timezone.utc)
    return ThroughputSample.from_measurement(
        timestamp_utc=ts,
        household_id=household_id,
        device_id=device_id,
        path=path,
        bytes_transferred=nbytes,
        duration_seconds=duration,
        tool=SYNTH_TOOL,
    )


def generate_cohort(spec: CohortSpec | None = None) -> list[ThroughputSample]:
    """Generate the full cohort, sorted by timestamp; deterministic per seed."""
    spec = spec or CohortSpec()
    spec.validate()
    tier_labels = list(TIER_LEVELS_MBPS)
    period_seconds = spec.period_days * 86400
    start = spec.start_utc.timestamp()
    change_at = start + period_seconds // 2  # multiple of 43200 s, so aligned

    samples: list[ThroughputSample] = []
    for i in range(spec.households):
        household_id = f"hh-{i:03d}"
        # String seeding hashes the text, so each household gets a stable
        # stream independent of generation order.
        rng = random.Random(f"{spec.seed}:{household_id}")
        level_before = TIER_LEVELS_MBPS[tier_labels[i % len(tier_labels)]]
        changes = i < spec.households_with_change
        level_after = _changed_level(level_before) if changes else level_before
        wifi_level = rng.uniform(spec.wifi_floor_mbps, spec.wifi_cap_mbps)

        def access_level(t: float) -> float:
            return level_after if changes and t >= change_at else level_before

        # Hourly access tests with bounded jitter.
        k = 0
        while True:
            t = start + k * spec.wan_interval_seconds + rng.uniform(
                -spec.wan_jitter_seconds, spec.wan_jitter_seconds
            )
            k += 1
            t = max(t, start)
            if t >= start + period_seconds:
                break
            samples.append(
                _sample_at(
                    rng, spec, household_id, "router", PATH_WAN_ACCESS, t, access_level(t)
                )
            )

        # Irregular wireless tests, a few hours apart.
        t = start + rng.uniform(0, spec.wifi_min_gap_seconds)
        while t < start + period_seconds:
            samples.append(
                _sample_at(
                    rng, spec, household_id, "dev-w1", PATH_LAN_WIFI, t, wifi_level
                )
            )
            t += rng.uniform(spec.wifi_min_gap_seconds, spec.wifi_max_gap_seconds)

    samples.sort(key=lambda s: (s.timestamp_utc, s.household_id, s.path, s.device_id))
    return samples


def write_cohort_store(spec: CohortSpec, path) -> int:
    """Generate a cohort and persist it as a fresh store; returns the count."""
    samples = generate_cohort(spec)
    with SampleStore(path) as store:
        store.append_many(samples)
    return len(samples)
