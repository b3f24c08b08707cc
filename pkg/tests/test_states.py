import numpy as np
import pytest

from criteria import ppt
from errors import (
    BudgetExceededError,
    EvenDimensionError,
    IndexOutOfRangeError,
    InvalidStateError,
    MultiplicityNotDivisibleError,
    NotNormalizedError,
    ParameterRangeError,
    SizeLimitError,
)
from numkernel import eigh, kron
from states import (
    BipartiteDims,
    DensityMatrix,
    PureState,
    SeparableEnsemble,
    Side,
    antisymmetric_projector,
    assemble,
    basis_projector,
    flip_operator,
    isospectral_separable,
    isospectral_werner,
    make_rng,
    max_entangled_basis,
    maximally_mixed,
    monotonicity_counterexample,
    partial_trace,
    partial_transpose,
    phi_plus,
    product_state,
    random_mixed,
    random_pure,
    random_separable,
    random_unitary,
    schmidt_spectrum,
    separable_projector,
    symmetric_projector,
    werner,
    werner_spectrum,
)


def _sorted_eigs(mat):
    return np.sort(np.linalg.eigvalsh(mat))[::-1]


# Types

def test_dims_cap():
    with pytest.raises(SizeLimitError):
        BipartiteDims(65, 64)


@pytest.mark.parametrize(
    "mat, invariant",
    [
        (np.diag([0.5, 0.5, 0.5, 0.5]), "trace"),
        (np.array([[0.5, 0.5], [0.0, 0.5]]), "dims mismatch"),
        (np.diag([1.2, -0.2, 0.0, 0.0]), "positivity"),
        (np.array([[0.5, 0, 0, 0.3], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0.5]]), "hermiticity"),
    ],
)
def test_density_matrix_invariants(mat, invariant):
    with pytest.raises(InvalidStateError) as info:
        DensityMatrix(BipartiteDims(2, 2), mat)
    assert info.value.invariant == invariant


def test_pure_state_norm():
    with pytest.raises(InvalidStateError):
        PureState(BipartiteDims(2, 2), [1, 1, 0, 0])


def test_ensemble_weights_must_sum_to_one():
    with pytest.raises(InvalidStateError):
        SeparableEnsemble(np.array([0.5, 0.4]), ((np.eye(2) / 2, np.eye(2) / 2),) * 2)


# assemble

def test_assemble_single_factor(rng):
    a = random_mixed(BipartiteDims(2, 1), None, rng).mat
    b = random_mixed(BipartiteDims(3, 1), None, rng).mat
    rho = assemble(SeparableEnsemble(np.array([1.0]), ((a, b),)))
    np.testing.assert_allclose(rho.mat, np.kron(a, b), atol=1e-15)
    assert rho.certificate is not None


def test_assemble_classical_mixture():
    ensemble = SeparableEnsemble(
        np.array([0.5, 0.5]),
        ((basis_projector(2, 0), basis_projector(2, 0)), (basis_projector(2, 1), basis_projector(2, 1))),
    )
    np.testing.assert_allclose(assemble(ensemble).mat, np.diag([0.5, 0, 0, 0.5]))


def test_random_three_term_ensembles_pass_ppt():
    for trial in range(20):
        rho, _ = random_separable(BipartiteDims(2, 3), 3, make_rng(5, trial))
        assert ppt(rho).holds


# partial trace and transpose

def test_partial_trace_of_product(rng):
    sigma = random_mixed(BipartiteDims(2, 1), None, rng).mat
    tau = random_mixed(BipartiteDims(3, 1), None, rng).mat
    rho = product_state(sigma, tau)
    np.testing.assert_allclose(partial_trace(rho, Side.B), sigma, atol=1e-12)
    np.testing.assert_allclose(partial_trace(rho, Side.A), tau, atol=1e-12)


def test_partial_trace_of_phi_plus(phi_plus_state):
    np.testing.assert_allclose(phi_plus_state.reduced_a, np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(phi_plus_state.reduced_b, np.eye(2) / 2, atol=1e-15)


def test_partial_trace_of_counterexample(counterexample):
    np.testing.assert_allclose(counterexample.reduced_a, np.diag([0.75, 0.25]), atol=1e-15)
    np.testing.assert_allclose(counterexample.reduced_b, np.diag([0.25, 0.75]), atol=1e-15)


def test_partial_trace_preserves_trace_and_positivity():
    for trial in range(100):
        rho = random_mixed(BipartiteDims(2, 3), 3, make_rng(9, trial))
        for side in Side:
            reduced = rho.reduced(side)
            assert np.trace(reduced) == pytest.approx(1.0, abs=1e-12)
            assert eigh(reduced).values.min >= -1e-9


def test_partial_transpose_of_product(rng):
    a = random_mixed(BipartiteDims(2, 1), None, rng).mat
    b = random_mixed(BipartiteDims(2, 1), None, rng).mat
    np.testing.assert_allclose(partial_transpose(product_state(a, b)), kron(a.T, b), atol=1e-15)


def test_partial_transpose_of_phi_plus(phi_plus_state):
    values = eigh(partial_transpose(phi_plus_state)).values.to_list()
    assert values == pytest.approx([0.5, 0.5, 0.5, -0.5], abs=1e-12)


@pytest.mark.parametrize("side", [Side.A, Side.B])
def test_partial_transpose_is_an_involution(side):
    rho = random_mixed(BipartiteDims(2, 3), None, make_rng(3))
    once = partial_transpose(rho, side)
    twice = partial_transpose(once, side, dims=rho.dims)
    np.testing.assert_array_equal(twice, rho.mat)
    assert np.trace(once) == pytest.approx(1.0)
    np.testing.assert_allclose(once, once.conj().T, atol=1e-15)


def test_partial_transpose_sides_share_spectrum():
    rho = random_mixed(BipartiteDims(3, 3), None, make_rng(4))
    np.testing.assert_allclose(_sorted_eigs(partial_transpose(rho, Side.A)),
                               _sorted_eigs(partial_transpose(rho, Side.B)), atol=1e-12)


# Schmidt spectrum

def test_schmidt_spectrum_of_product():
    vec = np.kron([1, 0, 0], [0, 1, 0]).astype(complex)
    assert schmidt_spectrum(PureState(BipartiteDims(3, 3), vec)).to_list() == pytest.approx([1, 0, 0], abs=1e-15)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_schmidt_spectrum_of_phi_plus(d):
    assert schmidt_spectrum(phi_plus(d)).to_list() == pytest.approx([1 / d] * d, abs=1e-14)


def test_schmidt_spectrum_matches_singular_values():
    for trial in range(20):
        psi = random_pure(BipartiteDims(3, 3), make_rng(21, trial))
        singular = np.linalg.svd(psi.coefficients(), compute_uv=False)
        np.testing.assert_allclose(schmidt_spectrum(psi).values, singular ** 2, atol=1e-12)
        assert schmidt_spectrum(psi).total == pytest.approx(1.0, abs=1e-10)


# Maximally entangled basis and P_k

def test_max_entangled_basis_reproduces_phi_plus():
    psi = max_entangled_basis(2, 2, 2)
    overlap = np.vdot(phi_plus(2).vec, psi.vec)
    assert abs(overlap) == pytest.approx(1.0, abs=1e-12)


def test_max_entangled_basis_is_orthonormal():
    d = 3
    basis = np.array([max_entangled_basis(d, j, k).vec for j in range(1, d + 1) for k in range(1, d + 1)])
    np.testing.assert_allclose(basis.conj() @ basis.T, np.eye(d * d), atol=1e-12)


def test_max_entangled_basis_has_flat_reductions():
    d = 3
    for j in range(1, d + 1):
        for k in range(1, d + 1):
            rho = max_entangled_basis(d, j, k).density()
            np.testing.assert_allclose(rho.reduced_a, np.eye(d) / d, atol=1e-12)


@pytest.mark.parametrize("j, k", [(0, 1), (1, 4)])
def test_max_entangled_basis_labels(j, k):
    with pytest.raises(IndexOutOfRangeError):
        max_entangled_basis(3, j, k)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_separable_projector_two_forms_agree(d):
    for k in range(1, d + 1):
        proj, certificate = separable_projector(d, k)
        via_basis = sum(np.outer(v, v.conj()) for v in (max_entangled_basis(d, j, k).vec for j in range(1, d + 1)))
        np.testing.assert_allclose(proj, via_basis, atol=1e-12)
        np.testing.assert_allclose(assemble(certificate).mat, proj / d, atol=1e-15)
        assert np.trace(proj).real == d
        np.testing.assert_allclose(proj @ proj, proj)


def test_separable_projectors_are_orthogonal():
    d = 3
    projectors = [separable_projector(d, k)[0] for k in range(1, d + 1)]
    for k in range(d):
        for l in range(d):
            if k != l:
                assert not np.any(projectors[k] @ projectors[l])


# Werner states

def test_flip_projectors():
    d = 3
    flip = flip_operator(d)
    np.testing.assert_array_equal(flip @ flip, np.eye(d * d))
    assert np.trace(symmetric_projector(d)).real == pytest.approx(6)
    assert np.trace(antisymmetric_projector(d)).real == pytest.approx(3)


def test_werner_singlet():
    assert werner(2, 1.0).spectrum.to_list() == pytest.approx([1, 0, 0, 0], abs=1e-14)


def test_werner_d3_p07():
    expected = [0.7 / 3] * 3 + [0.05] * 6
    assert werner(3, 0.7).spectrum.to_list() == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
@pytest.mark.parametrize("p", [0.0, 0.3, 0.5, 0.7, 1.0])
def test_werner_closed_form(d, p):
    rho = werner(d, p)
    expected = sorted((v for v, m in werner_spectrum(d, p) for _ in range(m)), reverse=True)
    np.testing.assert_allclose(rho.spectrum.values, expected, atol=1e-12)
    np.testing.assert_allclose(rho.reduced_a, np.eye(d) / d, atol=1e-12)
    np.testing.assert_allclose(rho.reduced_b, np.eye(d) / d, atol=1e-12)
    flip = flip_operator(d)
    np.testing.assert_allclose(flip @ rho.mat @ flip, rho.mat, atol=1e-15)


def test_werner_unitary_invariance():
    rho = werner(3, 0.4)
    for trial in range(20):
        u = random_unitary(3, make_rng(31, trial))
        uu = np.kron(u, u)
        assert np.linalg.norm(uu @ rho.mat @ uu.conj().T - rho.mat) <= 1e-10


@pytest.mark.parametrize("d, p", [(1, 0.5), (3, -0.1), (3, 1.5)])
def test_werner_range(d, p):
    with pytest.raises(ParameterRangeError):
        werner(d, p)


# Isospectral counterparts

def test_isospectral_werner_d3_weights():
    p = 0.7
    _, ensemble = isospectral_werner(3, p)
    # P_1/3 and P_2/3 carry 3(1-p)/6 each, P_3/3 carries 3p/3
    assert len(ensemble) == 9
    np.testing.assert_allclose(ensemble.weights[:6], (1 - p) / 6)
    np.testing.assert_allclose(ensemble.weights[6:], p / 3)
    assert ensemble.weights.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("d", [3, 5])
@pytest.mark.parametrize("p", [0.0, 0.25, 0.6, 0.7, 0.8, 1.0])
def test_isospectral_werner_matches_werner(d, p):
    rho = werner(d, p)
    twin, certificate = isospectral_werner(d, p)
    np.testing.assert_allclose(twin.spectrum.values, rho.spectrum.values, atol=1e-12)
    np.testing.assert_allclose(twin.reduced_a, np.eye(d) / d, atol=1e-12)
    np.testing.assert_allclose(twin.reduced_b, np.eye(d) / d, atol=1e-12)
    np.testing.assert_allclose(assemble(certificate).mat, twin.mat, atol=1e-9)
    assert ppt(twin).holds


def test_isospectral_werner_needs_odd_d():
    with pytest.raises(EvenDimensionError):
        isospectral_werner(4, 0.5)


def test_isospectral_separable_flat_spectrum():
    d = 3
    rho, _ = isospectral_separable([(1 / d ** 2, d ** 2)], d)
    np.testing.assert_allclose(rho.mat, np.eye(d * d) / d ** 2, atol=1e-15)


def test_isospectral_separable_single_block():
    d = 3
    rho, _ = isospectral_separable([(1 / d, d)], d)
    assert rho.spectrum.to_list()[:d] == pytest.approx([1 / d] * d)
    np.testing.assert_allclose(rho.reduced_a, np.eye(d) / d, atol=1e-12)


def test_isospectral_separable_reproduces_werner_twin():
    # descending blocks take ascending P_k, which is the Werner ordering while (1-p)/6 >= p/3
    p = 0.2
    twin, _ = isospectral_werner(3, p)
    rho, _ = isospectral_separable(werner_spectrum(3, p), 3)
    np.testing.assert_allclose(rho.mat, twin.mat, atol=1e-15)


def test_isospectral_separable_absorbs_normalization_slack():
    rho, certificate = isospectral_separable([(1 / 9 + 5e-12, 9)], 3)
    assert certificate.weights.sum() == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(rho.mat, np.eye(9) / 9, atol=1e-14)


@pytest.mark.parametrize(
    "spec, error",
    [
        ([(0.5, 2)], MultiplicityNotDivisibleError),
        ([(1 / 12, 12)], BudgetExceededError),
        ([(0.2, 3)], NotNormalizedError),
    ],
)
def test_isospectral_separable_errors(spec, error):
    with pytest.raises(error):
        isospectral_separable(spec, 3)


# Counterexample and random ensembles

def test_counterexample_spectra(counterexample):
    assert counterexample.spectrum.to_list() == pytest.approx([0.5, 0.5, 0, 0], abs=1e-14)
    assert counterexample.spectrum_a.to_list() == pytest.approx([0.75, 0.25], abs=1e-15)
    assert np.trace(counterexample.mat @ counterexample.mat).real == pytest.approx(0.5)
    assert np.trace(counterexample.reduced_a @ counterexample.reduced_a).real == pytest.approx(5 / 8)
    np.testing.assert_array_equal(monotonicity_counterexample().mat, counterexample.mat)


def test_random_states_are_reproducible():
    dims = BipartiteDims(2, 3)
    np.testing.assert_array_equal(random_pure(dims, 8).vec, random_pure(dims, 8).vec)
    np.testing.assert_array_equal(random_mixed(dims, 2, 8).mat, random_mixed(dims, 2, 8).mat)
    np.testing.assert_array_equal(random_separable(dims, 4, 8)[0].mat, random_separable(dims, 4, 8)[0].mat)


def test_per_trial_streams_differ():
    dims = BipartiteDims(2, 2)
    assert not np.array_equal(random_pure(dims, make_rng(1, 0)).vec, random_pure(dims, make_rng(1, 1)).vec)


def test_random_mixed_full_rank():
    for trial in range(20):
        assert random_mixed(BipartiteDims(2, 2), None, make_rng(6, trial)).is_full_rank()


def test_random_mixed_rank_range():
    with pytest.raises(ParameterRangeError):
        random_mixed(BipartiteDims(2, 2), 5, 0)


def test_random_separable_passes_ppt():
    for trial in range(30):
        rho, certificate = random_separable(BipartiteDims(3, 3), 9, make_rng(12, trial))
        assert ppt(rho).holds
        assert rho.certificate is certificate


@pytest.mark.parametrize("dims", [BipartiteDims(2, 2), BipartiteDims(3, 2)])
def test_maximally_mixed_certificate(dims):
    rho = maximally_mixed(dims)
    np.testing.assert_allclose(assemble(rho.certificate).mat, rho.mat)
    assert len(rho.certificate.weights) == dims.total
