import numpy as np
import pytest

from tracetaylor.operator_core import (HermitianOperator,
                                       HermitianValidationError, Interval,
                                       apply_function, counting_trace,
                                       decompose, operator_norm,
                                       projection_inequality_check, psd_leq,
                                       random_hermitian,
                                       random_hermitian_in_window,
                                       resolvent_inequality_check,
                                       schatten_norm, spectral_projection,
                                       trace, trace_class_bound_check)
from tracetaylor.scalar_functions import make_plateau_bump, make_poly_bump


def test_hermitian_validation():
    with pytest.raises(HermitianValidationError):
        HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(HermitianValidationError):
        HermitianOperator(np.zeros((2, 3)))
    H = HermitianOperator(np.array([[1.0, 2.0], [2.0, -1.0]]))
    assert H.dim == 2


def test_json_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    H = random_hermitian(rng, 4)
    d = H.to_json_dict()
    assert d["dim"] == 4
    H2 = HermitianOperator.from_json_dict(d)
    assert np.allclose(H.mat, H2.mat)
    p = tmp_path / "h.json"
    import json
    p.write_text(json.dumps(d))
    H3 = HermitianOperator.load_json(p)
    assert np.allclose(H.mat, H3.mat)


def test_decompose_diagonal():
    D = decompose(np.diag([2.0, 0.0, 1.0]))
    assert np.allclose(D.eigenvalues, [0.0, 1.0, 2.0])
    assert D.clusters == ((0,), (1,), (2,))


def test_decompose_degenerate_identity():
    D = decompose(np.eye(3))
    assert len(D.clusters) == 1
    assert np.allclose(D.projections[0], np.eye(3))


def test_decompose_completeness_and_reconstruction():
    rng = np.random.default_rng(1)
    H = random_hermitian(rng, 8)
    D = decompose(H.mat)
    assert np.max(np.abs(sum(D.projections) - np.eye(8))) < 1e-10
    rec = sum(v * P for v, P in zip(D.cluster_values, D.projections))
    scale = max(1.0, float(np.max(np.abs(H.mat))))
    assert np.max(np.abs(rec - H.mat)) < 1e-9 * scale


def test_apply_function_zero_and_one():
    rng = np.random.default_rng(2)
    H = random_hermitian_in_window(rng, 4, -0.5, 0.5)
    D = decompose(H.mat)
    f = make_poly_bump(10.0, 1.0, 4)  # vanishes on the spectrum
    assert np.max(np.abs(apply_function(f, D).mat)) < 1e-14
    g = make_plateau_bump(-0.6, 0.6, 0.4, 3)  # identically 1 on the spectrum
    assert np.max(np.abs(apply_function(g, D).mat - np.eye(4))) < 1e-12


def test_apply_function_hand_eigenvectors():
    # H = [[0,1],[1,0]] has eigenvectors (1,+-1)/sqrt(2) for +-1
    H = np.array([[0.0, 1.0], [1.0, 0.0]])
    f = make_poly_bump(0.0, 2.0, 4)
    D = decompose(H)
    c1, c2 = f.value(1.0), f.value(-1.0)
    expect = 0.5 * np.array([[c1 + c2, c1 - c2], [c1 - c2, c1 + c2]])
    assert np.max(np.abs(apply_function(f, D).mat - expect)) < 1e-12


def test_apply_function_multiplicative():
    rng = np.random.default_rng(3)
    H = random_hermitian_in_window(rng, 5, -0.8, 0.8)
    D = decompose(H.mat)
    f = make_poly_bump(0.0, 1.0, 4)
    g = make_poly_bump(0.2, 1.5, 6)
    lhs = apply_function(f.mul(g), D).mat
    rhs = apply_function(f, D).mat @ apply_function(g, D).mat
    scale = max(1.0, float(np.max(np.abs(rhs))))
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * scale


def test_trace_examples():
    assert trace(np.eye(3)) == 3
    assert trace(np.zeros((2, 2))) == 0
    rng = np.random.default_rng(4)
    A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    assert abs(trace(A + A.conj().T).imag) < 1e-12


def test_schatten_examples():
    assert schatten_norm(np.eye(4), 1) == pytest.approx(4.0)
    u = np.array([1.0, 2.0, 2.0])
    P = np.outer(u, u)
    for a in (1, 2, np.inf):
        assert schatten_norm(P, a) == pytest.approx(9.0)
    rng = np.random.default_rng(5)
    A = rng.standard_normal((6, 6))
    n1, n2, ninf = (schatten_norm(A, a) for a in (1, 2, np.inf))
    assert n1 >= n2 >= ninf
    with pytest.raises(ValueError):
        schatten_norm(A, 0.5)


def test_counting_trace_examples():
    D = decompose(np.diag([-1.0, 0.0, 2.0]))
    assert counting_trace(D, Interval(-0.5, 1.0)) == 1
    D2 = decompose(np.eye(3))
    assert counting_trace(D2, Interval(1.0, 1.0)) == 3
    rng = np.random.default_rng(6)
    D3 = decompose(random_hermitian(rng, 8).mat)
    full = Interval(float(D3.eigenvalues[0]), float(D3.eigenvalues[-1]))
    assert counting_trace(D3, full) == 8


def test_psd_leq():
    assert psd_leq(np.zeros((3, 3)), np.eye(3))
    A = np.diag([1.0, 2.0])
    assert psd_leq(A, A)
    assert not psd_leq(np.diag([2.0, 0.0]), np.diag([1.0, 1.0]))
    assert not psd_leq(np.diag([1.0, 1.0]), np.diag([2.0, 0.0]))


def test_resolvent_inequality():
    rng = np.random.default_rng(7)
    H0 = random_hermitian(rng, 4).mat
    assert resolvent_inequality_check(H0, np.zeros((4, 4)))
    W = random_hermitian(rng, 4, norm=2.0).mat
    assert resolvent_inequality_check(np.zeros((4, 4)), W)
    for _ in range(20):
        H0 = random_hermitian(rng, 6).mat
        W = random_hermitian(rng, 6, norm=float(rng.uniform(0.1, 3.0))).mat
        assert resolvent_inequality_check(H0, W)


def test_projection_inequality():
    rng = np.random.default_rng(8)
    H0 = random_hermitian(rng, 6).mat
    assert projection_inequality_check(H0, np.zeros((6, 6)), Interval(100.0, 101.0))
    for _ in range(20):
        H0 = random_hermitian(rng, 6).mat
        W = random_hermitian(rng, 6, norm=float(rng.uniform(0.1, 2.0))).mat
        assert projection_inequality_check(H0, W, Interval(-1.0, 1.0))


def test_spectral_projection_idempotent():
    rng = np.random.default_rng(9)
    D = decompose(random_hermitian(rng, 6).mat)
    E = spectral_projection(D, Interval(-1.0, 1.0))
    assert np.max(np.abs(E @ E - E)) < 1e-12


def test_trace_class_bounds():
    rng = np.random.default_rng(10)
    f = make_poly_bump(0.0, 1.0, 6)
    for _ in range(20):
        D = decompose(random_hermitian_in_window(rng, 8, -1.5, 1.5).mat)
        assert trace_class_bound_check(f, D)


def test_random_hermitian_window():
    rng = np.random.default_rng(11)
    H = random_hermitian_in_window(rng, 5, -0.3, 0.7)
    w = np.linalg.eigvalsh(H.mat)
    assert w[0] == pytest.approx(-0.3, abs=1e-12)
    assert w[-1] == pytest.approx(0.7, abs=1e-12)
    V = random_hermitian(rng, 5, norm=0.25)
    assert operator_norm(V.mat) == pytest.approx(0.25)
