"""Walk through the arm model: constants, first frequency, static deflection.

Run with ``python3 demos/model_report.py``.
"""
import math

from flexarm.cli import constants_rows, frequency_rows
from flexarm.config import load_config
from flexarm.dynamics import equilibrium
from flexarm.model import build_model

cfg = load_config()
shape, coeffs = build_model(cfg.beam)

print("Reference arm (shipped paper.toml)")
print(f"  mass ratio m / rho l   = {cfg.beam.mass_ratio:.4f}")
print(f"  time scale            = {cfg.time_scale:.4f} per second")
print(f"  beta_1 l              = {shape.beta_l:.6f}")
print(f"  omega_1               = {shape.omega:.3f} rad/s")

print("\nConstants against the reference block")
for row in constants_rows(cfg):
    if row["reference"] is not None:
        print(f"  {row['name']:<6} {row['computed']:+.4f}  ref {row['reference']:+.2f}  {row['status']}")

print("\nFirst frequency for a few tip-mass ratios")
for row in frequency_rows(cfg, [0.0, 0.05, cfg.beam.mass_ratio, 0.5, 1.0]):
    print(f"  alpha {row['alpha']:.4f}: beta_1 l {row['beta_l']:.5f}, omega_1 {row['omega']:.3f} rad/s")

print("\nStatic deflection and holding torque along the hub angle")
for deg in (-90, -60, -30, 0, 30):
    eq = equilibrium(math.radians(deg), coeffs)
    print(f"  theta {deg:+4d} deg: q_bar {eq.q:+.5f}, tau l/EI {eq.torque:+.4f}")
