# Deterministic synthetic IoT traffic for fixtures and desk-scale experiments.
