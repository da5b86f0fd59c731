#!/usr/bin/env python3
"""Generate tests/pinned_values.py.

Run once before freezing the acceptance suite. Two kinds of pins:

* external reference statistics (scipy) for the t-test, Spearman-with-ties and
  Shapiro-Wilk fixtures; the implementation under test never calls scipy's
  versions of these, so the frozen numbers act as an independent oracle;
* Monte Carlo oracle outcomes (mean/sd of final greedy accuracy) for the
  noise-calibration scenarios, produced by teachhub's own brute-force loop.

Deterministic: re-running must reproduce the file byte-for-byte.
"""

from __future__ import annotations

import sys
from pathlib import Path

import scipy.stats as ss

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from teachhub.games import builtin_body_parts, builtin_grammar  # noqa: E402
from teachhub.simulate import monte_carlo_oracle  # noqa: E402

T_XS = (4.1, 5.0, 6.2, 5.5, 4.8, 6.0, 5.1)
T_YS = (3.2, 4.4, 3.9, 5.0, 4.1, 3.6)

SPEARMAN_XS = (1, 2, 2, 3, 4, 5, 5, 6, 7, 8)
SPEARMAN_YS = (2, 1, 3, 3, 5, 4, 6, 6, 8, 7)

# published sample: 11 adult weights, a classic normality-test fixture
SHAPIRO_SAMPLE = (148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236)

ORACLE_SEED = 20240811
ORACLE_RUNS = 10_000


def main() -> None:
    t = ss.ttest_ind(T_XS, T_YS)
    rho = ss.spearmanr(SPEARMAN_XS, SPEARMAN_YS)
    sw = ss.shapiro(SHAPIRO_SAMPLE)

    body = builtin_body_parts()
    grammar = builtin_grammar()
    noisy = monte_carlo_oracle(body, alpha=0.3, p=0.89, n_iterations=15, n_runs=ORACLE_RUNS, seed=ORACLE_SEED)
    perfect_grammar = monte_carlo_oracle(grammar, alpha=0.3, p=1.0, n_iterations=15, n_runs=1000, seed=ORACLE_SEED)

    out = Path(__file__).resolve().parent.parent / "tests" / "pinned_values.py"
    out.write_text(
        f'''"""Frozen reference values; regenerate with tools/pin_reference_values.py."""

# scipy {__import__("scipy").__version__} reference outputs for fixed fixtures
T_TEST_XS = {T_XS!r}
T_TEST_YS = {T_YS!r}
T_TEST_STATISTIC = {float(t.statistic)!r}
T_TEST_P = {float(t.pvalue)!r}

SPEARMAN_XS = {SPEARMAN_XS!r}
SPEARMAN_YS = {SPEARMAN_YS!r}
SPEARMAN_RHO = {float(rho.statistic)!r}
SPEARMAN_P = {float(rho.pvalue)!r}

SHAPIRO_SAMPLE = {SHAPIRO_SAMPLE!r}
SHAPIRO_W = {float(sw.statistic)!r}
SHAPIRO_P = {float(sw.pvalue)!r}

# Monte Carlo oracle pins (teachhub's own brute-force loop)
ORACLE_SEED = {ORACLE_SEED}
ORACLE_RUNS = {ORACLE_RUNS}
BODY_PARTS_P089_ALPHA03_MEAN = {noisy.mean!r}
BODY_PARTS_P089_ALPHA03_SD = {noisy.sd!r}
GRAMMAR_P10_ALPHA03_MEAN = {perfect_grammar.mean!r}
GRAMMAR_P10_ALPHA03_SD = {perfect_grammar.sd!r}
''',
        encoding="utf-8",
    )
    print(f"wrote {out}")
    print(f"  body parts p=0.89: mean={noisy.mean:.6f} sd={noisy.sd:.6f} ci95={noisy.ci95}")
    print(f"  grammar   p=1.00: mean={perfect_grammar.mean:.6f} sd={perfect_grammar.sd:.6f}")


if __name__ == "__main__":
    main()
