"""FastAPI service wrapping the solver package."""
