"""Published reference values of S/|Lambda_A| (7 decimals) and fit parameters."""

# square ladders: legs -> per-bond entropy for N_x = 1..5
SQUARE_LADDER = {
    2: (0.6553433, 0.6498531, 0.6494635, 0.6494368, 0.6494349),
    3: (0.6413153, 0.6325619, 0.6316999, 0.6316095, 0.6315995),
}

# hexagonal ladders: N_y -> per-bond entropy for N_x = 1..5 (legs = N_y / 2)
HEX_LADDER = {
    4: (0.6891577, 0.6890932, 0.6890927, 0.6890927, 0.6890927),
    6: (0.6878024, 0.6876554, 0.6876523, 0.6876522, 0.6876522),
    8: (0.6871245, 0.6869344, 0.6869295, 0.6869293, 0.6869293),
}

# semi-infinite ladders: (family, legs) -> (per-bond entropy, tolerance)
INFINITE = {
    ("square", 2): (0.6494348, 5e-8),
    ("square", 3): (0.6315983, 5e-8),
    ("hex", 2): (0.6890927, 5e-7),
    ("hex", 3): (0.6876522, 5e-8),
}
SQUARE_2LEG_INFINITE_TOTAL = 1.2988696
SQUARE_3LEG_PF = (0.1203998879, 0.0471631199)
SQUARE_3LEG_INFINITE_TOTAL = 1.8947948
HEX_3LEG_PF = (1.0, 0.03734899, 0.03734899, 0.0046503105)

# vertical ladders: (value, quoted uncertainty) of C, Delta, alpha
VERTICAL_FIT = {
    "square": ((0.0819, 0.0003), (0.91, 0.01), (0.6113, 0.0003)),
    "hex": ((0.008081, 0.000005), (0.985, 0.001), (0.685068, 0.000005)),
}

# Monte Carlo fits on square lattices: N_x -> (C, Delta, alpha) as printed
SQUARE_MC_FIT = {
    1: ("0.0821(4)", "0.90(1)", "0.6110(4)"),
    2: ("0.104(1)", "0.78(2)", "0.589(1)"),
    3: ("0.108(1)", "0.75(2)", "0.584(1)"),
    4: ("0.110(2)", "0.73(3)", "0.582(2)"),
    5: ("0.112(1)", "0.71(2)", "0.580(1)"),
}
HEX_MC_FIT = {
    1: ("0.00812(1)", "0.974(4)", "0.68502(1)"),
    2: ("0.00849(4)", "0.94(1)", "0.68465(5)"),
    3: ("0.00870(3)", "0.904(7)", "0.68443(3)"),
    4: ("0.0092(2)", "0.82(3)", "0.6838(2)"),
    5: ("0.00941(7)", "0.81(1)", "0.68373(7)"),
}

# loop expansion of the 2-leg square ladder, in powers of q
SQUARE_2LEG_A = ({0: 1}, {0: 1, 3: 1}, {0: 1, 3: 2, 5: 1})
SQUARE_2LEG_B = ({2: 1}, {2: 1, 4: 1}, {2: 1, 4: 1, 5: 1, 6: 1})
