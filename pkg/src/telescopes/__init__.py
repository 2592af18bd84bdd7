"""Telescopes of finite groups: construction, lazy product elements and
mechanical verification at desk scale."""

__version__ = "0.1.0"
