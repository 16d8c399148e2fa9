"""HTTP service exposing dataset generation, training, evaluation, and reports."""
