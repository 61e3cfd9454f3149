"""
Per-stage pipeline latency
==========================

Times each processing stage over a synthetic 9-marker / 7-button workload
at the 50 Hz frame rate and prints cumulative means, the shape latency is
usually reported in for interaction pipelines.
"""

from gazebot.session import measure_latency

report = measure_latency(seconds=20.0)
print(report.to_table())
print()
budget = 20.0  # one 50 Hz frame
print(f"total {report.total_mean_ms:.3f} ms mean -> {budget / report.total_mean_ms:.0f}x "
      "headroom inside a 20 ms frame")
