"""Ratio curves for the wall-data extremiser family at several regularity exponents.

Run: python3 demos/sharpness_curves.py
"""
from stripnls import sharpness_probe

Ns = [10, 20, 50, 100, 200]
for beta, sigma in [(1.0, 0.25), (1.5, 0.25), (2.5, 0.25), (1.5, 0.75)]:
    curve = sharpness_probe(beta, 200, sigma, N_values=Ns)
    cells = "  ".join(f"{r:.4f}" for r in curve.ratio)
    print(f"beta={beta:<4} sigma={sigma:<5} ratio at N={Ns}: {cells}")
