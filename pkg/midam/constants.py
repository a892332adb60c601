# coding: utf-8

r"""Constants."""

# Attention logits are clamped to this interval before exponentiation
LOGIT_CLAMP = 30.0

# Floor on the attention denominator s2 inside the outer function
EPS_DEN = 1e-12

# Predictions are clamped to [PROB_CLAMP, 1 - PROB_CLAMP] inside the cross-entropy
PROB_CLAMP = 1e-7

# Smoothed-max temperature
TAU_DEFAULT = 0.1

# Minimum attention hidden width when derived from the input dimension
ATT_DIM_MIN = 4

# Upper bound of the dual domain [0, OMEGA_UPPER]
OMEGA_UPPER_DEFAULT = 10.0

MARGIN_DEFAULT = 0.1

WEIGHT_DECAY_DEFAULT = 1e-4

# Environment variable holding the default output directory of the command line
OUTDIR_ENV_VAR = "MIDAM_OUTDIR"
OUTDIR_DEFAULT = "runs"

# Synthetic witness benchmark: generate_synthetic arguments besides the seed
SYNTHETIC_BENCHMARK_DATA = dict(n_pos=50, n_neg=50, bag_size=32, d=10, witness_shift=2.0, witness_count=2)
