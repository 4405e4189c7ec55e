"""medens: scale a small set of doctor-written dialogue summaries into a large
synthetic training corpus with a medically-aware completion-backend ensemble,
and evaluate the result with concept / negation / ROUGE-L metrics plus a
blinded practitioner review service."""

__version__ = "0.1.0"
