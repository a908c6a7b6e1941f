"""tickbench: a benchmarking toolkit for time-series databases under
high-frequency market-data workloads.

The package generates deterministic synthetic trade and order-book data,
computes the reference analytics for sixteen benchmarks over an embedded
columnar engine, drives external database backends through a uniform
adapter contract, verifies cross-backend result consistency and reports
latency and storage metrics.
"""

__version__ = "0.1.0"
