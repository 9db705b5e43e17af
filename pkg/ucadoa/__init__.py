"""Wideband 2D DoA estimation with a uniform circular array."""
