"""
Built-in verification suites
============================

Same checks as ``defeatr verify``, driven from Python: solver exactness,
convergence rate, trace scaling laws, inequality-ratio stability,
estimator homogeneity, and a miniature end-to-end reliability cell.
"""
from defeatr.experiments import format_report, verify

results = verify()
print(format_report(results))

raise SystemExit(0 if all(r.passed for r in results) else 1)
