import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import dense_minor, random_instance, rel

from helm1d import qrec
from helm1d.assembly import (
    build_raw_system,
    build_rhs,
    build_scaling,
    build_symmetric_coefficient_matrix,
    build_system,
    cofactor_last_col,
    det_tridiag,
    dump_system,
    leading_minors,
    load_system_dump,
    reflection_block,
    system_from_arrays,
)
from helm1d.medium import LayeredMedium, ProblemInstance, boundary_coefficients, derive_params


def _plain(rng, n_min=1, n_max=10, omega=(1, 40)):
    while True:
        inst = random_instance(rng, n_max=n_max, omega=omega)
        if inst.n >= n_min:
            return inst


@given(st.floats(-0.999, 0.999))
def test_reflection_block_squares_to_identity(q):
    w = reflection_block(q)
    assert np.max(np.abs(w @ w - np.eye(2))) < 1e-14


@given(st.integers(0, 2**32 - 1))
def test_assembled_matrix_structure(seed):
    p = derive_params(_plain(np.random.default_rng(seed)))
    sysm = build_system(p)
    dense = sysm.to_dense()
    assert np.array_equal(dense, dense.T)
    for j, blk in enumerate(sysm.off_blocks, start=1):
        nz = np.argwhere(blk != 0)
        assert nz.tolist() == [[1, 0]]
        assert blk[1, 0] == -1.0 / p.sqrt_sigma[j]


def test_zero_jumps_single_interface():
    sysm = system_from_arrays([], [0.0])
    assert np.array_equal(sysm.to_dense(), [[0, 1], [1, 0]])


def test_half_jump_single_interface_has_determinant_minus_one():
    dense = system_from_arrays([], [0.5]).to_dense()
    assert np.allclose(dense, [[0.5, math.sqrt(0.75)], [math.sqrt(0.75), -0.5]])
    assert np.linalg.det(dense) == pytest.approx(-1.0)


def test_unit_phase_gives_minus_one_coupling():
    dense = system_from_arrays([1.0], [0.3, -0.2]).to_dense()
    assert dense[1, 2] == -1.0 and dense[2, 1] == -1.0


def test_build_system_rejects_no_jumps():
    p = derive_params(ProblemInstance(LayeredMedium([-1, 1], [1]), 1.0))
    with pytest.raises(ValueError):
        build_system(p)


def test_scaling_is_one_for_unit_phases_and_speeds():
    # x_j * omega / c in 2 pi Z for x_j = 0
    p = derive_params(ProblemInstance(LayeredMedium([-1, 0, 1], [1, 1]), 2 * math.pi))
    assert np.allclose(build_scaling(p).entries, 1.0)


def test_scaling_modulus_is_root_of_owning_speed():
    inst = ProblemInstance(LayeredMedium([-1, -0.4, 0.3, 1], [4.0, 0.25, 2.0]), 3.7)
    d = build_scaling(derive_params(inst)).entries
    assert abs(d[0]) == pytest.approx(2.0)
    assert np.allclose(np.abs(d), np.sqrt([4.0, 0.25, 0.25, 2.0]))


def test_rhs_entries():
    inst = ProblemInstance(LayeredMedium([-1, 0, 1], [2.0, 1.0]), math.pi, 0.0, 1.0)
    p = derive_params(inst)
    rhs = build_rhs(inst, p)
    assert rhs.r[0] == 0 and rhs.A1 == 0
    assert rhs.B_last == pytest.approx(-1j / (2 * math.pi))
    assert rhs.r[-1] == pytest.approx(1j / (2 * math.pi) * np.exp(1j * math.pi))
    inst3 = ProblemInstance(LayeredMedium([-1, -0.5, 0.5, 1], [1, 2, 3.0]), 2.0, 1 + 1j, 2)
    r = build_rhs(inst3, derive_params(inst3)).r
    assert np.all(r[1:-1] == 0)
    assert r[0] == pytest.approx(1j / 4 * np.exp(2j) * (1 + 1j))


def test_homogeneous_data_gives_zero_rhs():
    inst = ProblemInstance(LayeredMedium([-1, 0.1, 1], [1, 2.0]), 3.0, 0, 0)
    assert not np.any(build_rhs(inst, derive_params(inst)).r)


def test_raw_system_without_jumps_matches_closed_form():
    inst = ProblemInstance(LayeredMedium([-1, 1], [0.8]), 5.0, 0.3 + 0.2j, -1.1)
    raw = build_raw_system(inst)
    assert raw.matrix.shape == (2, 2)
    sol = np.linalg.solve(raw.matrix, raw.rhs)
    A1, B1 = boundary_coefficients(inst)
    assert abs(sol[0] - A1) <= 1e-14 * abs(A1)
    assert abs(sol[1] - B1) <= 1e-14 * abs(B1)


def test_fictitious_interfaces_leave_coefficients_unchanged():
    inst = ProblemInstance(LayeredMedium([-1, -0.6, 0.1, 0.7, 1], [1.3] * 4), 6.0, 0.2, 1.0)
    raw = build_raw_system(inst)
    sol = np.linalg.solve(raw.matrix, raw.rhs)
    A, B = sol[0::2], sol[1::2]
    assert np.allclose(A, A[0], rtol=0, atol=1e-14) and np.allclose(B, B[0], rtol=0, atol=1e-14)


def test_raw_system_transmission_residual():
    rng = np.random.default_rng(5)
    inst = ProblemInstance(LayeredMedium(np.concatenate([[-1], np.sort(rng.uniform(-1, 1, 5)), [1]]),
                                         rng.uniform(0.5, 2, 6)), 11.0, 0.5, 1.0)
    raw = build_raw_system(inst)
    sol = np.linalg.solve(raw.matrix, raw.rhs)
    res = raw.matrix[1:-1] @ sol
    assert np.max(np.abs(res)) <= 1e-12 * np.max(np.abs(sol))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_symmetric_system_follows_from_transmission_rows(n):
    """Each row pair of the symmetric system is a combination of the two
    transmission rows at the same interface, once A_1 and B_{n+1} are moved
    to the right-hand side; the same combination maps the data onto r."""
    rng = np.random.default_rng(100 + n)
    mesh = np.concatenate([[-1], np.sort(rng.uniform(-0.9, 0.9, n)), [1]])
    inst = ProblemInstance(LayeredMedium(mesh, rng.uniform(0.5, 2, n + 1)), 7.3, 0.4 - 0.3j, 1.2j)
    p = derive_params(inst)
    raw = build_raw_system(inst)
    A1, Bn = boundary_coefficients(inst)
    inner = raw.matrix[1:-1]  # 2n interface rows
    known = inner[:, 0] * A1 + inner[:, -1] * Bn
    reduced = inner[:, 1:-1]  # columns B_1, A_2, ..., A_{n+1}
    rhs = -known
    target = build_symmetric_coefficient_matrix(p)
    r = build_rhs(inst, p).r
    for i in range(n):
        rows = reduced[2 * i : 2 * i + 2]
        want = target[2 * i : 2 * i + 2]
        # T @ rows = want
        T = want[:, 2 * i : 2 * i + 2] @ np.linalg.inv(rows[:, 2 * i : 2 * i + 2])
        assert np.max(np.abs(T @ rows - want)) < 1e-13
        assert np.max(np.abs(T @ rhs[2 * i : 2 * i + 2] - r[2 * i : 2 * i + 2])) < 1e-13


@given(st.integers(0, 2**32 - 1))
def test_symmetric_system_inverse_factors_through_scaling(seed):
    p = derive_params(_plain(np.random.default_rng(seed), n_max=8))
    d = build_scaling(p).entries
    inv = np.linalg.inv(build_symmetric_coefficient_matrix(p))
    green = np.linalg.inv(build_system(p).to_dense())
    assert rel(inv, d[:, None] * green * d[None, :]) < 1e-10


def test_det_tridiag_small_cases():
    assert det_tridiag([2.5 - 1j], []) == 2.5 - 1j
    assert det_tridiag([1, 1], [2]) == -3
    with pytest.raises(ValueError):
        det_tridiag([1, 2], [])


def test_det_tridiag_matches_dense():
    rng = np.random.default_rng(3)
    d = rng.normal(size=6) + 1j * rng.normal(size=6)
    o = rng.normal(size=5) + 1j * rng.normal(size=5)
    dense = np.diag(d) + np.diag(o, 1) + np.diag(o, -1)
    assert abs(det_tridiag(d, o) - np.linalg.det(dense)) <= 1e-12 * abs(np.linalg.det(dense))


def test_cofactor_boundary_rows():
    rng = np.random.default_rng(4)
    d = rng.normal(size=5) + 1j * rng.normal(size=5)
    o = rng.normal(size=4) + 1j * rng.normal(size=4)
    assert cofactor_last_col(d, 5, o) == pytest.approx(leading_minors(d[:4], o[:3])[-1])
    assert cofactor_last_col(d, 1, o) == pytest.approx(np.prod(o))
    with pytest.raises(IndexError):
        cofactor_last_col(d, 6, o)
    with pytest.raises(IndexError):
        cofactor_last_col(d, 0, o)


def test_cofactor_matches_dense_minor():
    rng = np.random.default_rng(6)
    d = rng.normal(size=5) + 1j * rng.normal(size=5)
    o = rng.normal(size=4) + 1j * rng.normal(size=4)
    dense = np.diag(d) + np.diag(o, 1) + np.diag(o, -1)
    for i in range(1, 6):
        ref = dense_minor(dense, i - 1, 4)
        assert abs(cofactor_last_col(d, i, o) - ref) <= 1e-12 * max(abs(ref), 1e-300)


@pytest.mark.parametrize("n", range(1, 9))
def test_cofactors_of_assembled_system(n):
    rng = np.random.default_rng(40 + n)
    sigma = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    q = rng.uniform(-0.8, 0.8, n)
    sysm = system_from_arrays(np.sqrt(sigma[: n - 1]), q)
    dense = sysm.to_dense()
    det = np.linalg.det(dense)
    last = qrec.green_column(np.sqrt(sigma[: n - 1]), q, "last").entries
    for i in range(1, 2 * n + 1):
        ref = dense_minor(dense, i - 1, 2 * n - 1)
        got = cofactor_last_col(sysm, i)
        assert abs(got - ref) <= 1e-10 * max(abs(ref), 1e-300)
        # (M^-1)_{i,2n} = (-1)^(i+2n) minor / det
        assert abs((-1) ** i * ref / det - last[i - 1]) <= 1e-10 * max(abs(last[i - 1]), 1e-300)


def test_dump_round_trip(tmp_path):
    p = derive_params(_plain(np.random.default_rng(9), n_min=3))
    dense = build_system(p).to_dense()
    path = tmp_path / "m.txt"
    dump_system(dense, path)
    lines = path.read_text().splitlines()
    assert lines[0] == f"# {dense.shape[0]} {dense.shape[1]}"
    r, c, re, im = lines[1].split()
    assert (r, c) == ("1", "1")
    assert np.array_equal(load_system_dump(path), dense)
