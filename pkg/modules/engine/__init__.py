"""Training, evaluation, checkpoints, reports and the command-line surface."""
