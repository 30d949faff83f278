"""gptent: entropies, composites and information bounds in finite probabilistic theories."""

__version__ = "0.1.0"
