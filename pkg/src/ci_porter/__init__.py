"""Travis CI to GitHub Actions translation, linting and evaluation toolkit."""

__version__ = "0.1.0"
