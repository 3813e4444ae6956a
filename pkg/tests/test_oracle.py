import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from vbs_entropy.model import build_hexagonal_half, build_square_half, custom_graph
from vbs_entropy.oracle import (
    OracleScopeError,
    doubled_graph,
    exact_vbs_rdm,
    loop_enumerate_z,
    reduced_density,
    schmidt_spectrum,
    spin_flip_permutation,
    vbs_wavefunction,
    vertical_strand_expansion,
)
from vbs_entropy.transfer import Q, ladder_coefficients, ladder_entropy, reflect_legs, vertical_ladder_z
from vbs_entropy.pauli import matching_operator

q = Q


@pytest.mark.parametrize(
    "n, a, b",
    [
        (1, 1, q**2),
        (2, 1 + q**3, q**2 + q**4),
        (3, 1 + 2 * q**3 + q**5, q**2 + q**4 + q**5 + q**6),
    ],
)
def test_loop_expansion_square_two_leg(n, a, b):
    le = loop_enumerate_z(build_square_half(n, 2))
    assert le.coeff.get((), 0) == a
    # s1.s2 coefficient carries the matching sign of an adjacent pair
    assert -le.coeff.get(((0, 1),), 0) == b


@pytest.mark.parametrize("n", range(1, 7))
def test_loop_equals_transfer_square(n):
    le = loop_enumerate_z(build_square_half(n, 2))
    assert le.coeff == ladder_coefficients("square", 2, n).signed()


@pytest.mark.parametrize("legs, n", [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3)])
def test_loop_equals_transfer_hex(legs, n):
    le = loop_enumerate_z(build_hexagonal_half(n, 2 * legs))
    tr = ladder_coefficients("hex", legs, n).signed()
    if n % 2 == 0:
        tr = reflect_legs(tr, legs)
    assert le.coeff == tr
    assert le.entropy().per_bond == pytest.approx(ladder_entropy("hex", legs, n).per_bond, abs=1e-13)


def test_loop_scope_rejects_degree_four():
    with pytest.raises(OracleScopeError, match="factors"):
        loop_enumerate_z(build_square_half(2, 3))


def test_loop_bond_budget():
    g = build_square_half(6, 2)
    with pytest.raises(OracleScopeError, match="budget"):
        loop_enumerate_z(g, max_bonds=10)


def _brute_force_count(graph):
    leg = set(graph.boundary)
    count = 0
    for mask in itertools.product((0, 1), repeat=len(graph.bonds)):
        deg = [0] * graph.n_vertices
        for take, (i, j) in zip(mask, graph.bonds):
            if take:
                deg[i] += 1
                deg[j] += 1
        if all(d in (0, 2) or (d == 1 and v in leg) for v, d in enumerate(deg)):
            count += 1
    return count


@pytest.mark.parametrize(
    "graph",
    [
        build_square_half(2, 2),
        build_hexagonal_half(1, 4),
        custom_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)], [0, 2]),
    ],
)
def test_admissible_subsets_match_brute_force(graph):
    assert loop_enumerate_z(graph).configurations == _brute_force_count(graph)


def test_single_loop_weight():
    # a triangle with one leg: empty set plus the loop of length 3
    g = custom_graph(3, [(0, 1), (1, 2), (2, 0)], [0])
    le = loop_enumerate_z(g)
    assert le.coeff == {(): 1 - q**2}


@pytest.mark.parametrize("family", ["square", "hex"])
@pytest.mark.parametrize("size", range(1, 7))
def test_strand_expansion_equals_recursion(family, size):
    z1 = vertical_ladder_z(family, size, exact=True)
    z2 = matching_operator(vertical_strand_expansion(size, family), size, exact=True)
    assert np.all(z1 == z2)


def test_strand_expansion_range():
    with pytest.raises(ValueError):
        vertical_strand_expansion(0)


def test_singlet_entropy():
    res = exact_vbs_rdm(custom_graph(1, [], [0]))
    assert res.entropy == pytest.approx(math.log(2), abs=1e-14)


@pytest.mark.parametrize(
    "graph, family, legs, nx",
    [
        (build_square_half(1, 2), "square", 2, 1),
        (build_square_half(2, 2), "square", 2, 2),
        (build_square_half(1, 3), "square", 3, 1),
        (build_hexagonal_half(1, 4), "hex", 2, 1),
    ],
)
def test_ed_equals_transfer(graph, family, legs, nx):
    assert exact_vbs_rdm(graph).per_bond == pytest.approx(ladder_entropy(family, legs, nx).per_bond, abs=1e-9)


def test_ed_square_rung_value():
    assert exact_vbs_rdm(build_square_half(1, 2)).per_bond == pytest.approx(0.6553433, abs=5e-8)


def test_schmidt_spectra_agree_between_halves():
    g = build_square_half(2, 2)
    pa = schmidt_spectrum(g, "A")
    pb = schmidt_spectrum(g, "B")
    np.testing.assert_allclose(np.sort(pa), np.sort(pb), atol=1e-12)
    assert pa.sum() == pytest.approx(1.0, abs=1e-12)


def test_rdm_commutes_with_spin_flip():
    g = build_square_half(1, 2)
    full = doubled_graph(g)
    wf = vbs_wavefunction(full)
    rho = reduced_density(wf, "A")
    perm = spin_flip_permutation(wf.configs_a, full.spin2[: full.n_half])
    np.testing.assert_allclose(rho[np.ix_(perm, perm)], rho, atol=1e-14)
    np.testing.assert_allclose(rho, rho.T, atol=1e-15)
    assert np.trace(rho) == pytest.approx(1.0)


def test_doubled_graph_shape():
    g = build_square_half(1, 2)
    full = doubled_graph(g)
    # one rung per half plus two crossing bonds
    assert len(full.edges) == 4
    assert full.n_vertices == 4
    assert sum(full.spin2) == 2 * len(full.edges)


def test_ed_edge_budget():
    with pytest.raises(OracleScopeError, match="budget"):
        exact_vbs_rdm(build_hexagonal_half(2, 4))


def test_reduced_density_side_argument():
    wf = vbs_wavefunction(doubled_graph(build_square_half(1, 2)))
    with pytest.raises(ValueError):
        reduced_density(wf, "C")


def _unfiltered_subset_sum(graph):
    """Integrate every bond subset's monomial, odd-degree subsets included."""
    from vbs_entropy import invariants as inv

    L = graph.boundary_size
    legs = inv.constant(1)
    for k, v in enumerate(graph.boundary):
        legs = inv.multiply(legs, inv.linear_factor(k, L + v))
    total = {}
    for mask in itertools.product((0, 1), repeat=len(graph.bonds)):
        poly = dict(legs)
        for take, (i, j) in zip(mask, graph.bonds):
            if take:
                poly = inv.multiply(poly, {((L + min(i, j), L + max(i, j)),): Fraction(-1)})
        for v in range(graph.n_vertices):
            poly = inv.integrate(poly, L + v, L)
        for mono, c in poly.items():
            inv.add_into(total, mono, c)
    return total


def test_parity_filter_matches_unfiltered_sum():
    g = custom_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)], [0, 2])
    assert len(g.bonds) == 6
    unfiltered = _unfiltered_subset_sum(g)
    assert unfiltered == loop_enumerate_z(g).coeff
