# Temporal evaluation: periods, splits, experiments and degradation summaries.
