"""Run a bundled grid sweep to CSV and read it back for plotting."""
import sys
import tempfile
from pathlib import Path

from entqkd.sweep import load_sweep, read_csv, run_sweep

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp()) / "fig6.csv"
res = run_sweep("fig6", load_sweep("fig6"), out=out)
table = read_csv(out)
print(f"wrote {len(table.rows)} rows to {out}")
print("metadata:", table.meta)
s, w = res.grid("s_norm"), res.grid("w_norm")
print(f"s_norm in [{s.min():.3f}, {s.max():.3f}], w_norm in [{w.min():.3f}, {w.max():.3f}]")
print("w_norm <= s_norm everywhere:", bool((w <= s).all()))
