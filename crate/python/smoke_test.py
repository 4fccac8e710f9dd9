"""Smoke test for the fewmode extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`.
"""

import json
import math

import fewmode


def close(a, b, tol):
    return abs(a - b) < tol


def main():
    pot = fewmode.Potential.double_delta("schroedinger", 1.0, 10.0)
    basis = fewmode.Basis(pot, (-0.5, 0.5), [1, 2])
    assert len(basis) == 2
    for k in (0.7, 3.0, 9.0):
        e = 0.5 * k * k
        res = fewmode.few_mode(pot, basis, e)
        exact = pot.oracle(e)
        gap = max(abs(res["full"][i][j] - exact[i][j]) for i in range(2) for j in range(2))
        assert gap < 1e-6, gap

    cav = fewmode.Potential.thin_mirror(1.0, 0.289)
    atom = fewmode.Atom(9 * math.pi, 0.01, 0.0)
    b9 = fewmode.Basis(cav, (-0.5, 0.5), [9])
    point = fewmode.atom_spectrum(cav, b9, atom, 28.0)
    t = point["full"][1][0]
    r = point["full"][0][0]
    assert close(abs(t) ** 2 + abs(r) ** 2, 1.0, 1e-8)

    assert fewmode.mode_sequence("symmetric", 3, dominant=9) == [7, 9, 11]
    assert fewmode.mode_sequence("counting_up", 2) == [1, 3]
    assert close(fewmode.mode_sum_divergence(0.5, 1), -2.0, 1e-15)
    assert "double-delta-one-mode" in fewmode.presets()

    report = json.loads(fewmode.verify("divergence-control"))
    assert report["passed"], report
    print("smoke test passed")


if __name__ == "__main__":
    main()
