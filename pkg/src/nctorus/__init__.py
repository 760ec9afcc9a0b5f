"""Quantized hyperbolic toral automorphisms: Weyl calculus, number theory of the
deformation parameter, asymptotic free-product states and fluctuation moments."""

__version__ = "0.1.0"
