"""Constants shared by the coloring and the compressed multiplication."""

GAMMA = 1.0 / 96
ELL = 3
