"""
qsiset version information.

This is the single source of truth for the package version.
It is updated by python-semantic-release based on conventional commits.
"""

__version__ = "0.1.0"
