"""Independent brute-force oracles for the analysis arithmetic.

Everything here is written from the definitions, on purpose in the most
naive way available: O(n^2) scans, explicit index arithmetic, no calls
into the package under test and no stdlib statistics helpers. Tests
compare the real implementations against these.
"""

from __future__ import annotations

import math


def naive_median(values):
    ordered = sorted(values)
    n = len(ordered)
    if n == 0:
        raise ValueError("median of empty list")
    if n % 2 == 1:
        return float(ordered[n // 2])
    return (ordered[n // 2 - 1] + ordered[n // 2]) / 2


def naive_mean(values):
    total = 0.0
    count = 0
    for v in values:
        total += v
        count += 1
    return total / count


def naive_sample_stdev(values):
    n = len(values)
    if n < 2:
        raise ValueError("need two values")
    m = naive_mean(values)
    acc = 0.0
    for v in values:
        acc += (v - m) ** 2
    return math.sqrt(acc / (n - 1))


def naive_sample_error_of_difference(wifi_access_pairs):
    diffs = [w - a for w, a in wifi_access_pairs]
    return naive_sample_stdev(diffs) / math.sqrt(len(diffs))


def naive_percentile_nearest_rank(values, fraction):
    ordered = sorted(values)
    rank = math.ceil(fraction * len(ordered))
    if rank < 1:
        rank = 1
    return ordered[rank - 1]


def naive_tier(mbps):
    if mbps < 50:
        return "<50"
    if mbps < 100:
        return "50-100"
    if mbps < 200:
        return "100-200"
    if mbps < 400:
        return "200-400"
    if mbps < 800:
        return "400-800"
    return ">800"


def naive_windows(samples, window_seconds=21600):
    """O(n^2) coincident-window grouper over (epoch_seconds, path, mbps) rows.

    Returns a sorted list of dicts, one per window containing both paths.
    """
    indexes = []
    for t, _path, _mbps in samples:
        idx = math.floor(t / window_seconds)
        if idx not in indexes:
            indexes.append(idx)
    indexes.sort()
    out = []
    for idx in indexes:
        wifi = []
        access = []
        for t, path, mbps in samples:
            if math.floor(t / window_seconds) != idx:
                continue
            if path == "lan_wifi":
                wifi.append(mbps)
            else:
                access.append(mbps)
        if not wifi or not access:
            continue
        mw = naive_median(wifi)
        ma = naive_median(access)
        out.append(
            {
                "window_start": idx * window_seconds,
                "median_wifi": mw,
                "median_access": ma,
                "wifi_count": len(wifi),
                "access_count": len(access),
                "is_bottleneck": mw < ma,
            }
        )
    return out


def naive_prevalence(bottleneck_flags):
    hits = 0
    for flag in bottleneck_flags:
        if flag:
            hits += 1
    return hits / len(bottleneck_flags)


def naive_cdf(values):
    """Sort-and-rank empirical CDF with tie merge."""
    ordered = sorted(values)
    n = len(ordered)
    points = []
    for i, v in enumerate(ordered):
        if i + 1 < n and ordered[i + 1] == v:
            continue
        points.append((v, (i + 1) / n))
    return points


def naive_tier_summary(rows):
    """rows: (tier, median_access, effective). Group-and-average by scanning."""
    order = ["<50", "50-100", "100-200", "200-400", "400-800", ">800"]
    out = []
    for tier in order:
        group = [r for r in rows if r[0] == tier]
        if not group:
            continue
        out.append(
            {
                "tier": tier,
                "vantage_count": len(group),
                "mean_access": naive_mean([r[1] for r in group]),
                "mean_effective": naive_mean([r[2] for r in group]),
                "mean_gap": naive_mean([r[1] - r[2] for r in group]),
            }
        )
    return out


class NaiveBucketSim:
    """Event-by-event token bucket replay used against the implementation."""

    def __init__(self, rate, burst):
        self.rate = rate
        self.burst = burst
        self.tokens = 0.0
        self.last = 0.0

    def reserve(self, now, amount):
        elapsed = now - self.last
        self.last = now
        self.tokens = min(self.burst, self.tokens + elapsed * self.rate)
        self.tokens -= amount
        if self.tokens >= 0:
            return 0.0
        return -self.tokens / self.rate
