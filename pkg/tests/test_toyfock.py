import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsflow.cocycle import StepFunction
from qsflow.opcore import SpaceDims, dag, random_complex, random_hermitian
from qsflow.perturb import BlockCoefficient, make_isometric_coefficient, weyl_coefficient
from qsflow.toyfock import (
    CapExceeded,
    DiscreteFockState,
    ErrorRow,
    ErrorTable,
    InnerFlowSpec,
    ToyConfig,
    apply_flow,
    apply_hp_cocycle,
    apply_initial,
    apply_multiplier,
    apply_multiplier_adjoint,
    cross_validate,
    discrete_exp_vector,
    exp_vector_factors,
    homomorphism_defect,
    isometry_defect,
    max_dim,
    perturbed_matrix_element_state,
    perturbed_matrix_element_transfer,
    product_inner,
    scaled_coefficient,
    slice_unitary,
    slice_unitary_second_order,
)

from conftest import maxabs

seeds = st.integers(0, 2 ** 32 - 1)
NS = [64, 128, 256, 512]


def random_spec(r, d=2, n=1, scale=0.7):
    return InnerFlowSpec(random_hermitian(d, r, 0.5), random_complex((d * n, d), r, scale))


def random_state(r, cfg):
    return DiscreteFockState(random_complex(cfg.full_dim, r), cfg)


def steps_fn(r, n=1, T=1.0):
    return StepFunction(((T / 2, random_complex(n, r, 0.5)), (T / 2, random_complex(n, r, 0.5))))


# dense reference operators, built with explicit Kronecker products


def dense_local(A, k, cfg):
    d, nh, N = cfg.dims.d, cfg.dims.nhat, cfg.N
    out = np.zeros((cfg.full_dim, cfg.full_dim), dtype=complex)
    for a in range(nh):
        for b in range(nh):
            E = np.zeros((nh, nh))
            E[a, b] = 1.0
            block = A[a * d:(a + 1) * d, b * d:(b + 1) * d]
            out += np.kron(np.kron(np.kron(np.eye(nh ** (N - k)), E), np.eye(nh ** (k - 1))), block)
    return out


def dense_U(spec, cfg, i):
    u = slice_unitary(spec, cfg.tau)
    U = np.eye(cfg.full_dim, dtype=complex)
    for k in range(1, i + 1):
        U = dense_local(u, k, cfg) @ U
    return U


def dense_X(spec, F, cfg):
    Ft = scaled_coefficient(F, cfg.tau)
    X = np.eye(cfg.full_dim, dtype=complex)
    for i in range(cfg.N):
        Ui = dense_U(spec, cfg, i)
        X = (np.eye(cfg.full_dim) + dag(Ui) @ dense_local(Ft, i + 1, cfg) @ Ui) @ X
    return X


def test_config_and_cap(monkeypatch):
    cfg = ToyConfig(4, 1.0, SpaceDims(2, 1))
    assert cfg.tau == 0.25 and cfg.full_dim == 32
    assert np.allclose(cfg.slice_times(), [0, 0.25, 0.5, 0.75])
    with pytest.raises(ValueError):
        ToyConfig(0, 1.0, SpaceDims(2, 1))
    big = ToyConfig(21, 1.0, SpaceDims(2, 1))
    assert not big.fits()
    with pytest.raises(CapExceeded):
        discrete_exp_vector(None, [1, 0], big)
    monkeypatch.setenv("QSFLOW_MAX_DIM", "16")
    assert max_dim() == 16
    assert not cfg.fits()
    with pytest.raises(CapExceeded):
        cfg.require_fit()
    assert ToyConfig(600, 1.0, SpaceDims(2, 1)).fits() is False


def test_slice_unitary_examples(rng):
    dims = SpaceDims(2, 2)
    assert maxabs(slice_unitary(InnerFlowSpec.trivial(dims), 0.1) - np.eye(6)) == 0
    spec = random_spec(rng, 2, 2)
    u = slice_unitary(spec, 0.05)
    assert maxabs(dag(u) @ u - np.eye(6)) < 1e-12


def test_slice_unitary_three_halves_order(rng):
    spec = random_spec(rng, 2, 2, 1.0)
    taus = np.array([1e-2, 1e-3, 1e-4])
    errs = [np.linalg.norm(slice_unitary(spec, t) - slice_unitary_second_order(spec, t), 2) for t in taus]
    slope = np.polyfit(np.log(taus), np.log(errs), 1)[0]
    assert slope == pytest.approx(1.5, abs=0.1)


def test_exp_vector_examples(rng):
    cfg = ToyConfig(5, 1.0, SpaceDims(2, 1))
    u = np.array([0.6, 0.8j])
    vac = discrete_exp_vector(None, u, cfg)
    assert vac.norm() == pytest.approx(1.0)
    assert maxabs(vac.vector[:2] - u) == 0 and maxabs(vac.vector[2:]) == 0
    g = steps_fn(rng)
    assert discrete_exp_vector(g, u, cfg, normalized=True).norm() == pytest.approx(1.0)
    raw = discrete_exp_vector(g, u, cfg, normalized=False)
    assert raw.norm() > 1.0


def test_exp_vector_inner_limit(rng):
    f, g = steps_fn(rng), steps_fn(rng)
    cfg = ToyConfig(512, 1.0, SpaceDims(1, 1))
    got = product_inner(exp_vector_factors(f, cfg), exp_vector_factors(g, cfg))
    fv = [v for _, v in f.segments]
    gv = [v for _, v in g.segments]
    inner = sum(0.5 * np.vdot(a, b) for a, b in zip(fv, gv))
    ref = np.exp(-0.5 * f.l2_norm_sq() - 0.5 * g.l2_norm_sq() + inner)
    assert abs(got - ref) / abs(ref) < 1e-2


def test_product_inner_matches_state_vectors(rng):
    cfg = ToyConfig(4, 1.0, SpaceDims(1, 2))
    f, g = steps_fn(rng, 2), steps_fn(rng, 2)
    a = discrete_exp_vector(f, [1.0], cfg)
    b = discrete_exp_vector(g, [1.0], cfg)
    assert abs(a.inner(b) - product_inner(exp_vector_factors(f, cfg), exp_vector_factors(g, cfg))) < 1e-14


def test_hp_cocycle_examples(rng):
    cfg = ToyConfig(4, 1.0, SpaceDims(2, 1))
    xi = random_state(rng, cfg)
    spec = random_spec(rng)
    assert maxabs(apply_hp_cocycle(spec, cfg, xi, 0).vector - xi.vector) == 0
    trivial = InnerFlowSpec.trivial(cfg.dims)
    assert maxabs(apply_hp_cocycle(trivial, cfg, xi).vector - xi.vector) == 0
    assert apply_hp_cocycle(spec, cfg, xi).norm() == pytest.approx(xi.norm(), rel=1e-12)
    with pytest.raises(IndexError):
        apply_hp_cocycle(spec, cfg, xi, 5)


@given(seeds, st.integers(0, 4), st.integers(0, 4))
def test_hp_cocycle_composes(seed, i, j):
    r = np.random.default_rng(seed)
    cfg = ToyConfig(8, 1.0, SpaceDims(2, 1))
    spec = random_spec(r)
    xi = random_state(r, cfg)
    once = apply_hp_cocycle(spec, cfg, xi, i + j)
    twice = apply_hp_cocycle(spec, cfg, apply_hp_cocycle(spec, cfg, xi, i), j, start=i)
    assert maxabs(once.vector - twice.vector) < 1e-12


@given(seeds, st.integers(1, 4))
def test_adaptedness(seed, i):
    r = np.random.default_rng(seed)
    N = 5
    dims = SpaceDims(2, 1)
    spec = random_spec(r)
    tau = 0.2
    head_cfg = ToyConfig(i, tau * i, dims)
    head = random_state(r, head_cfg)
    tail = random_complex(2 ** (N - i), r)
    cfg = ToyConfig(N, tau * N, dims)
    full = DiscreteFockState(np.kron(tail, head.vector), cfg)
    got = apply_hp_cocycle(spec, cfg, full, i)
    want = np.kron(tail, apply_hp_cocycle(spec, head_cfg, head, i).vector)
    assert maxabs(got.vector - want) < 1e-12


@pytest.mark.parametrize("N", [1, 3, 6])
def test_kernels_match_dense(rng, N):
    cfg = ToyConfig(N, 1.0, SpaceDims(2, 1))
    spec = random_spec(rng)
    F = BlockCoefficient.from_matrix(random_complex((4, 4), rng, 0.5), cfg.dims)
    x = random_complex((2, 2), rng)
    xi = random_state(rng, cfg)
    U = dense_U(spec, cfg, N)
    assert maxabs(apply_hp_cocycle(spec, cfg, xi).vector - U @ xi.vector) < 1e-12
    X = np.kron(np.eye(2 ** N), x)
    assert maxabs(apply_initial(xi, x).vector - X @ xi.vector) < 1e-12
    assert maxabs(apply_flow(spec, cfg, x, xi).vector - dag(U) @ X @ U @ xi.vector) < 1e-12
    XF = dense_X(spec, F, cfg)
    assert maxabs(apply_multiplier(spec, F, cfg, xi).vector - XF @ xi.vector) < 1e-12
    assert maxabs(apply_multiplier_adjoint(spec, F, cfg, xi).vector - dag(XF) @ xi.vector) < 1e-12


def test_flow_examples(rng):
    cfg = ToyConfig(5, 1.0, SpaceDims(2, 1))
    spec = random_spec(rng)
    xi = random_state(rng, cfg)
    assert maxabs(apply_flow(spec, cfg, np.eye(2), xi).vector - xi.vector) < 1e-12
    x = random_complex((2, 2), rng)
    trivial = InnerFlowSpec.trivial(cfg.dims)
    assert maxabs(apply_flow(trivial, cfg, x, xi).vector - apply_initial(xi, x).vector) == 0


def test_multiplier_zero(rng):
    cfg = ToyConfig(4, 1.0, SpaceDims(2, 1))
    xi = random_state(rng, cfg)
    out = apply_multiplier(random_spec(rng), BlockCoefficient.zero(cfg.dims), cfg, xi)
    assert maxabs(out.vector - xi.vector) == 0


@pytest.mark.parametrize("N", [3, 5])
def test_state_and_transfer_routes_agree(rng, N):
    dims = SpaceDims(2, 1)
    cfg = ToyConfig(N, 1.0, dims)
    spec = random_spec(rng)
    F = weyl_coefficient(0.3, [0.4 - 0.2j], [[np.exp(0.5j)]], d=2)
    G = BlockCoefficient.from_matrix(random_complex((4, 4), rng, 0.5), dims)
    x = random_complex((2, 2), rng)
    f, g = steps_fn(rng), steps_fn(rng)
    u, v = random_complex(2, rng), random_complex(2, rng)
    a = perturbed_matrix_element_state(spec, F, G, x, f, g, u, v, cfg)
    b = perturbed_matrix_element_transfer(spec, F, G, x, f, g, u, v, cfg)
    assert abs(a - b) < 1e-13


def test_flow_converges_to_cocycle(rng):
    dims = SpaceDims(2, 1)
    spec = random_spec(rng)
    Z = BlockCoefficient.zero(dims)
    x = random_hermitian(2, rng) + np.eye(2)
    tab = cross_validate(spec, Z, Z, x, steps_fn(rng), steps_fn(rng), 1.0, NS)
    assert tab.errors[-1] < 5e-2
    assert tab.monotone()


def test_multiplier_only_converges(rng):
    dims = SpaceDims(2, 1)
    F = weyl_coefficient(0.4, [0.3 + 0.2j], [[np.exp(0.7j)]], d=2)
    x = random_hermitian(2, rng) + np.eye(2)
    tab = cross_validate(InnerFlowSpec.trivial(dims), F, F, x, steps_fn(rng), steps_fn(rng), 1.0, NS)
    assert tab.errors[-1] < 5e-2
    assert tab.fitted_order >= 0.5


def test_unit_preservation(rng):
    dims = SpaceDims(2, 1)
    spec = random_spec(rng)
    F = make_isometric_coefficient(random_hermitian(2, rng, 0.3), random_complex((2, 2), rng, 0.5), np.eye(2))
    f = steps_fn(rng)
    u = np.array([0.6, 0.8])
    tab = cross_validate(spec, F, F, np.eye(2), f, f, 1.0, NS, u, u)
    assert abs(tab.rows[0].exact - 1.0) < 1e-10
    assert tab.errors[-1] < 5e-2


def test_isometry_defect_decays(rng):
    dims = SpaceDims(2, 1)
    spec = random_spec(rng)
    F = weyl_coefficient(0.4, [0.5], [[np.exp(0.3j)]], d=2)
    f = steps_fn(rng)
    u = np.array([1.0, 0.0])
    Ns = np.array(NS)
    errs = [isometry_defect(spec, F, f, u, ToyConfig(int(N), 1.0, dims)) for N in Ns]
    slope = np.polyfit(np.log(1.0 / Ns), np.log(errs), 1)[0]
    assert slope >= 0.5


def test_homomorphism_defect_measured(rng):
    cfg = ToyConfig(4, 1.0, SpaceDims(2, 1))
    spec = random_spec(rng)
    xi = random_state(rng, cfg)
    x, y = random_complex((2, 2), rng), random_complex((2, 2), rng)
    assert homomorphism_defect(spec, cfg, x, y, xi) < 1e-12
    F = weyl_coefficient(0.2, [0.3], [[1.0]], d=2)
    perturbed = homomorphism_defect(spec, cfg, x, y, xi, F)
    assert np.isfinite(perturbed) and perturbed >= 0


def test_error_table_csv():
    rows = [ErrorRow(N, 1.0 / N, 1 + 1j, 1 + 1j + 1.0 / N) for N in (4, 8, 16)]
    tab = ErrorTable(rows)
    assert tab.fitted_order == pytest.approx(1.0)
    assert tab.monotone()
    lines = tab.to_csv().splitlines()
    assert lines[0] == ",".join(ErrorTable.COLUMNS)
    assert lines[1].endswith(",") and not lines[-1].endswith(",")
    assert float(lines[1].split(",")[1]) == 0.25
    assert lines[-1].split(",")[-1] == "%.17g" % tab.fitted_order
