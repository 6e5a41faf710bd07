"""Sifted key, QBER and QABR for the three protocols on the bundled presets."""
from entqkd import evaluate_all, load_config

for preset in ("fig5", "fig6", "fig7"):
    cfg = load_config(preset)
    print(f"{preset}: lambda_p = {cfg.source.lambda_p:.3g}/s, alpha_a = {cfg.alpha_a:.2f}")
    for name, r in evaluate_all(cfg).items():
        plain = evaluate_all(cfg, strict=False)[name].qber
        print(f"  {name:12s} K = {r.sifted_key:8.1f}  QBER = {r.qber:.4f} (errors/total {plain:.4f})  QABR = {r.qabr:.4f}")
