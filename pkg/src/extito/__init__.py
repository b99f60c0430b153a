"""Extended Itô calculus for symmetric Lévy-type processes on a time grid."""

__version__ = "0.1.0"
