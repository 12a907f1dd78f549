"""
A small seeded experiment
=========================

Random source positions, the same ones for every sweep value, and a CSV
table with one row per mission plus an aggregate row per value. Rerun it
and the file is byte for byte the same.
"""
import hashlib
import sys

from plumesurvey.harness import format_table, parse_config, run_experiment

CONFIG = """
strategy = single_phase
sweep_key = p1_lane_m
sweep_values = 20, 10
replicates = 4
seed = 7
"""

spec = parse_config(CONFIG)
text = format_table(run_experiment(spec))
sys.stdout.write(text)
print("sha256", hashlib.sha256(text.encode()).hexdigest()[:16])
print("again ", hashlib.sha256(format_table(run_experiment(spec)).encode()).hexdigest()[:16])
