"""Stand-in error evaluator for the RNN example config.

Reads ``name=value`` lines on stdin and prints ``err=`` / ``edp=`` lines.
The error is a smooth made-up function of hidden size and depth; edp is
left at 1 because the config takes EDP from the analytical model.
"""
import math
import sys

kv = dict(line.strip().split("=", 1) for line in sys.stdin if "=" in line)
hidden = int(kv["hidden"])
layers = int(kv["layers"])
err = 4.0 + 120.0 / math.sqrt(hidden * layers) + 0.3 * (layers - 2) ** 2
print(f"err={err:.6f}")
print("edp=1")
