"""
API Package

This package contains the FastAPI application and routing logic for running
testbed episodes and benchmark batches over HTTP.
"""

from .main import app

__all__ = ["app"]
