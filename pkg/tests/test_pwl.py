import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import affine, half_sq
from twoscale.directions import DirectionSet, build_direction_set
from twoscale.errors import InternalConsistencyError, InvalidParameterError
from twoscale.harness import cached_mesh, fitted_order
from twoscale.mesh import DomainSpec, TriMesh, locate_point, node_boundary_distance
from twoscale.pwl import (
    NodalField,
    build_stencils,
    evaluate,
    evaluate_many,
    exact_second_differences,
    interpolate,
    read_field_csv,
    second_difference,
    second_differences,
    write_field_csv,
)


def random_points(mesh, n, seed=0):
    rng = np.random.default_rng(seed)
    e = rng.integers(0, mesh.n_elements, n)
    b = rng.dirichlet(np.ones(3), n)
    return np.einsum("nk,nkd->nd", b, mesh.nodes[mesh.elements[e]])


def test_affine_reproduced_everywhere(mesh16):
    f = interpolate(mesh16, affine)
    pts = random_points(mesh16, 500)
    assert np.max(np.abs(evaluate_many(f, pts) - affine(pts))) <= 1e-12


def test_zero_field(mesh8):
    f = interpolate(mesh8, lambda x: np.zeros(len(x)))
    assert np.all(f.values == 0)
    f = interpolate(mesh8, lambda x: 0.0)
    assert np.all(f.values == 0)


def test_nodal_values_exact(mesh8):
    f = interpolate(mesh8, half_sq)
    assert np.array_equal(f.values, half_sq(mesh8.nodes))
    for i in (0, 5, mesh8.n_nodes - 1):
        assert evaluate(f, mesh8.nodes[i]) == f.values[i]


def test_value_count_checked(mesh8):
    with pytest.raises(InvalidParameterError):
        NodalField(mesh8, np.zeros(mesh8.n_nodes + 1))


def test_centroid_interpolation_error_formula(disk):
    # for u = |x|^2/2 the centroid error is (1/6) * mean squared vertex distance to the centroid
    errs, hs = [], []
    for ht in (1 / 8, 1 / 16, 1 / 32):
        mesh = cached_mesh(disk, ht, 0)
        f = interpolate(mesh, half_sq)
        p = mesh.nodes[mesh.elements]
        c = p.mean(axis=1)
        oracle = np.sum((p - c[:, None]) ** 2, axis=(1, 2)) / 6
        got = f.values[mesh.elements].mean(axis=1) - half_sq(c)
        assert np.max(np.abs(got - oracle)) <= 1e-14
        assert got.max() <= mesh.h ** 2 / 6
        errs.append(got.max())
        hs.append(mesh.h)
    assert fitted_order(hs, errs) >= 1.8


def test_edge_midpoint_and_dual_element(mesh16):
    f = interpolate(mesh16, lambda x: np.sin(3 * x[:, 0]) * np.cos(2 * x[:, 1]))
    rng = np.random.default_rng(5)
    count = 0
    for e in rng.integers(0, mesh16.n_elements, 200):
        for k in range(3):
            nb = mesh16.neighbors[e, k]
            if nb < 0:
                continue
            a, b = mesh16.elements[e, (k + 1) % 3], mesh16.elements[e, (k + 2) % 3]
            assert abs(evaluate(f, 0.5 * (mesh16.nodes[a] + mesh16.nodes[b]))
                       - 0.5 * (f.values[a] + f.values[b])) <= 1e-14
            t = rng.random()
            p = (1 - t) * mesh16.nodes[a] + t * mesh16.nodes[b]
            vals = []
            for el in (e, nb):
                bary = mesh16.barycentric(np.array([el]), p[None])[0]
                vals.append(bary @ f.values[mesh16.elements[el]])
            assert abs(vals[0] - vals[1]) <= 1e-10
            count += 1
    assert count > 100


def test_dhat_rule(mesh16):
    dist = node_boundary_distance(mesh16)
    delta = 0.2
    st_ = build_stencils(mesh16, build_direction_set(0.5), delta)
    d = dist[st_.nodes]
    assert np.all(st_.delta_hat[d >= delta] == delta)
    assert np.array_equal(st_.delta_hat[d < delta], d[d < delta])
    assert np.all(st_.delta_hat > 0)
    # a node at distance delta/2 gets delta/2
    i = int(np.argmin(np.abs(d - 0.1)))
    st2 = build_stencils(mesh16, build_direction_set(0.5), 2 * d[i])
    assert st2.delta_hat[i] == d[i]
    assert st2.delta_hat[i] == st2.delta / 2


def test_endpoints_inside_and_relocated_consistently(mesh8):
    st_ = build_stencils(mesh8, build_direction_set(0.5), 0.3)
    f = interpolate(mesh8, lambda x: np.exp(x[:, 0]) + x[:, 1] ** 3)
    assert st_.plus_bary.min() >= -1e-12 and st_.minus_bary.min() >= -1e-12
    cached = st_.endpoint_sums(f.values)
    for r in range(0, len(st_.nodes), 7):
        for j in range(st_.n_directions):
            fresh = 0.0
            for p in (st_.plus_points[r, j], st_.minus_points[r, j]):
                loc = locate_point(mesh8, p)
                fresh += loc.bary @ f.values[mesh8.elements[loc.element]]
            assert abs(fresh - cached[r, j]) <= 1e-12


def test_boundary_node_flagged_interior_rejected(mesh8):
    flags = mesh8.boundary.copy()
    flags[mesh8.boundary_nodes[0]] = False
    bad = TriMesh(mesh8.nodes, mesh8.elements, flags, domain=mesh8.domain)
    with pytest.raises(InternalConsistencyError):
        build_stencils(bad, build_direction_set(0.5), 0.2)


def test_affine_second_differences_vanish(mesh16):
    st_ = build_stencils(mesh16, build_direction_set(0.3), 0.25)
    sd = second_differences(interpolate(mesh16, affine), st_)
    assert np.max(np.abs(sd)) <= 1e-10


def test_quadratic_exact_endpoints_give_one(mesh16):
    st_ = build_stencils(mesh16, build_direction_set(0.3), 0.25)
    sd = exact_second_differences(half_sq, st_)
    # centred differences are exact for quadratics; only rounding remains
    assert np.max(np.abs(sd - 1)) <= 1e-12


def test_quadratic_interpolated_rate_at_fixed_delta(disk):
    hs, errs = [], []
    for ht in (1 / 8, 1 / 16, 1 / 32, 1 / 64):
        mesh = cached_mesh(disk, ht, 0)
        st_ = build_stencils(mesh, build_direction_set(0.8), 0.25)
        sd = second_differences(interpolate(mesh, half_sq), st_)
        e = sd - 1
        assert e.min() >= -1e-12  # interpolant of a convex function lies above it
        d = node_boundary_distance(mesh)[st_.nodes]
        inner = d >= 0.25
        assert np.all(e[inner] <= mesh.h ** 2 / 0.25 ** 2)
        errs.append(np.abs(e[inner]).max())
        hs.append(mesh.h)
    assert fitted_order(hs, errs) >= 1.8


def test_single_second_difference_matches_batch(ctx8, mesh8):
    f = interpolate(mesh8, lambda x: np.cosh(x[:, 0] - 0.3 * x[:, 1]))
    sd = second_differences(f, ctx8.stencil)
    for r in (0, 10, len(ctx8.stencil.nodes) - 1):
        i = int(ctx8.stencil.nodes[r])
        for j in range(ctx8.stencil.n_directions):
            assert abs(second_difference(f, ctx8.stencil, i, j) - sd[r, j]) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 10_000))
def test_linearity(alpha, beta, seed):
    mesh = cached_mesh(DomainSpec.disk(), 1 / 8, 0)
    st_ = build_stencils(mesh, build_direction_set(0.5), 0.3)
    rng = np.random.default_rng(seed)
    u = NodalField(mesh, rng.standard_normal(mesh.n_nodes))
    w = NodalField(mesh, rng.standard_normal(mesh.n_nodes))
    lhs = second_differences(alpha * u + beta * w, st_)
    rhs = alpha * second_differences(u, st_) + beta * second_differences(w, st_)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + np.abs(rhs).max())


def test_symmetry_under_direction_flip(mesh8):
    d = build_direction_set(0.5)
    flipped = DirectionSet.from_angles(d.angles + np.pi, d.theta)
    assert np.allclose(flipped.angles, d.angles, atol=1e-14)
    st_ = build_stencils(mesh8, d, 0.3)
    f = interpolate(mesh8, lambda x: np.exp(x[:, 0] * x[:, 1]))
    w = f.values
    plus = evaluate_many(f, st_.plus_points.reshape(-1, 2)).reshape(st_.plus_points.shape[:2])
    minus = evaluate_many(f, st_.minus_points.reshape(-1, 2)).reshape(plus.shape)
    c = w[st_.nodes][:, None]
    dh2 = st_.delta_hat[:, None] ** 2
    forward = (plus - 2 * c + minus) / dh2
    backward = (minus - 2 * c + plus) / dh2
    assert np.max(np.abs(forward - backward)) <= 1e-12
    assert np.max(np.abs(forward - second_differences(f, st_))) <= 1e-10


def test_field_csv_round_trip(tmp_path, mesh8):
    f = interpolate(mesh8, lambda x: np.sin(x[:, 0]) / 3)
    path = tmp_path / "f.csv"
    write_field_csv(f, path)
    assert path.read_text().splitlines()[0] == "node_index,x,y,value"
    assert np.array_equal(read_field_csv(mesh8, path).values, f.values)
