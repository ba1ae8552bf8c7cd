"""
Simulatore di proteopatia Aβ / tau e danno neuronale su grafi cerebrali.
"""

__version__ = "0.1.0"
