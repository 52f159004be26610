"""Numeric-integration reference for the clock functional -log(.) under the
injected fault densities. Independent of the C++ implementation."""
from mpmath import mp, quad, log, mpf

mp.dps = 30


def power_bias_density(gamma):
    return lambda y: gamma * y ** (gamma - 1)


def reflect(y):
    return 1 - y


def rotate_half(y):
    return y + mpf(1) / 2 if y < mpf(1) / 2 else y - mpf(1) / 2


def mean_functional(density, f, breaks):
    return quad(lambda y: -log(f(y)) * density(y), breaks)


if __name__ == "__main__":
    pb2 = power_bias_density(2)
    ident = lambda y: y
    half = [0, mpf(1) / 2, 1]
    print("PowerBias(2) E[-log y]            =", mean_functional(pb2, ident, half))
    print("PowerBias(2) E[-log(1-y)]         =", mean_functional(pb2, reflect, half))
    print("PowerBias(2) E[-log rot(y)]       =", mean_functional(pb2, rotate_half, half))
    comp = lambda y: reflect(rotate_half(y))
    print("PowerBias(2) E[-log(1-rot(y))]    =", mean_functional(pb2, comp, half))
    uni = lambda y: 1
    print("Ideal E[-log y]                   =", mean_functional(uni, ident, half))
    print("Ideal E[-log(1-y)]                =", mean_functional(uni, reflect, half))
    # Serial mark probabilities under PowerBias(gamma): CDF is y^gamma.
    for n in (4, 16):
        print(f"PowerBias(2) mark probs N={n}:", [((i + 1) / n) ** 2 - (i / n) ** 2 for i in range(n)])
    # LowThinning(c, q): density (1-q)/(1-cq) on (0,c), 1/(1-cq) on (c,1).
    c, q = mpf("0.5"), mpf(1)
    print("LowThinning(0.5,1) KS gap vs uniform at 0.5 =", c - c * (1 - q) / (1 - c * q))
