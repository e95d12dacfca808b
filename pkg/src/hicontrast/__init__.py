"""Acoustic scattering by high-contrast inclusions and their limiting obstacle models."""

__version__ = "0.1.0"
