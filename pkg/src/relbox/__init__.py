"""Box-World environment, relational attention agent, and actor-critic trainer."""

__version__ = "0.1.0"
