"""How PBS leakage erodes the CHSH and Wigner security margins.

Both margins are 1 at the quantum value and 0 at the eavesdropping bound.
The Wigner margin drops faster, so it is the stricter test with real optics.
"""
from entqkd import load_config
from entqkd.polarization import PbsParams
from entqkd.security import evaluate

base = load_config("fig6")
print(" |t|^2  |t_perp|^2   S        W         s_norm   w_norm")
for t2, tp2 in ((1.0, 0.0), (0.99, 0.01), (0.98, 0.05), (0.95, 0.1), (0.9, 0.2)):
    r = evaluate(base.with_pbs(PbsParams.from_intensity(t2, tp2)))
    print(f" {t2:.2f}   {tp2:.2f}      {r.s:+.4f}  {r.w_param:+.5f}  {r.s_norm:.4f}   {r.w_norm:.4f}")
