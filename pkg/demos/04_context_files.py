# %% [markdown]
# Precompute once, compare many times: context files and the CLI.

# %%
import subprocess
import sys
import tempfile
from pathlib import Path

from tworank import graph as gr
from tworank.google import build_rank_context, load_context, save_context

tmp = Path(tempfile.mkdtemp())
g = gr.gen_small_world(5000, 0.2, seed=1)
ctx = build_rank_context(g)
save_context(ctx, tmp / "sw.ctx")
print((tmp / "sw.ctx").stat().st_size, "bytes;", "round trip ok:", load_context(tmp / "sw.ctx").equals(ctx), flush=True)

# %% the same through the command line
cli = [sys.executable, "-m", "tworank", "--compact"]
subprocess.run(cli + ["gen", "er", "300", "0.05", "--seed", "2", "-o", str(tmp / "er.txt")], check=True)
subprocess.run(cli + ["build", str(tmp / "er.txt"), str(tmp / "er.ctx"), "--verify"], check=True)
subprocess.run(cli + ["compare", str(tmp / "er.ctx"), "3", "17"], check=True)
subprocess.run(cli + ["topk", str(tmp / "er.ctx"), "5"], check=True)
