"""Fractal-to-Euclidean crossover laboratory for l-level Sierpinski gaskets."""
