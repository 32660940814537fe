# Generated by scripts/calibrate_sketch.py; edit by rerunning it.
KAPPA = 0.1206
D_CONST = 4.0
