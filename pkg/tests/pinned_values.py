"""Frozen reference values; regenerate with tools/pin_reference_values.py."""

# scipy 1.15.3 reference outputs for fixed fixtures
T_TEST_XS = (4.1, 5.0, 6.2, 5.5, 4.8, 6.0, 5.1)
T_TEST_YS = (3.2, 4.4, 3.9, 5.0, 4.1, 3.6)
T_TEST_STATISTIC = 3.1895766908365473
T_TEST_P = 0.008613023787844837

SPEARMAN_XS = (1, 2, 2, 3, 4, 5, 5, 6, 7, 8)
SPEARMAN_YS = (2, 1, 3, 3, 5, 4, 6, 6, 8, 7)
SPEARMAN_RHO = 0.932515337423313
SPEARMAN_P = 8.359628526206167e-05

SHAPIRO_SAMPLE = (148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236)
SHAPIRO_W = 0.7888146948631716
SHAPIRO_P = 0.006703814061898823

# Monte Carlo oracle pins (teachhub's own brute-force loop)
ORACLE_SEED = 20240811
ORACLE_RUNS = 10000
BODY_PARTS_P089_ALPHA03_MEAN = 0.8494933333333334
BODY_PARTS_P089_ALPHA03_SD = 0.1476803297410447
GRAMMAR_P10_ALPHA03_MEAN = 1.0
GRAMMAR_P10_ALPHA03_SD = 0.0
