import numpy as np
import pytest

from criteria import (
    UNDISTILLABLE_NOTE,
    chain_report,
    entropic,
    explore_reduction_majorization,
    majorization,
    ppt,
    ppt_boundary,
    rank_criterion,
    reduction,
    spectrally_equivalent,
    werner_ppt_boundary,
)
from errors import CertificateMismatchError, ParameterRangeError
from models import CriterionName
from states import (
    BipartiteDims,
    SeparableEnsemble,
    Side,
    basis_projector,
    isospectral_werner,
    make_rng,
    maximally_mixed,
    product_state,
    random_mixed,
    random_separable,
    werner,
)

P_GRID = [round(0.01 * i, 2) for i in range(101)]
SPECTRAL = [
    CriterionName.reduction_A,
    CriterionName.reduction_B,
    CriterionName.rank,
    CriterionName.majorization_A,
    CriterionName.majorization_B,
    CriterionName.entropic,
]


# PPT

def test_ppt_of_phi_plus(phi_plus_state):
    verdict = ppt(phi_plus_state)
    assert not verdict.holds
    assert verdict.margin == pytest.approx(-0.5, abs=1e-12)
    assert verdict.witness


def test_ppt_of_certified_states():
    for trial in range(20):
        rho, _ = random_separable(BipartiteDims(3, 3), 5, make_rng(50, trial))
        assert ppt(rho).holds


@pytest.mark.parametrize("d", [2, 3, 4])
def test_werner_ppt_fails_above_one_half(d):
    for p in P_GRID:
        assert ppt(werner(d, p)).holds == (p <= 0.5)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_werner_ppt_boundary(d):
    assert werner_ppt_boundary(d) == pytest.approx(0.5, abs=1e-6)


def test_ppt_boundary_needs_a_sign_change():
    with pytest.raises(ParameterRangeError):
        ppt_boundary(lambda p: werner(2, p), 0.0, 0.4)


# Reduction

def test_reduction_of_product_state(rng):
    a = random_mixed(BipartiteDims(2, 1), None, rng).mat
    b = random_mixed(BipartiteDims(3, 1), None, rng).mat
    rho = product_state(a, b)
    for side in Side:
        verdict = reduction(rho, side)
        assert verdict.holds and verdict.margin >= -1e-12


def test_reduction_of_singlet():
    verdict = reduction(werner(2, 1.0), Side.A)
    assert not verdict.holds
    assert verdict.margin == pytest.approx(-0.5, abs=1e-12)
    assert any("distillable" in note for note in verdict.notes)


def test_reduction_blind_to_odd_werner_states():
    for p in P_GRID:
        rho = werner(3, p)
        assert reduction(rho, Side.A).holds and reduction(rho, Side.B).holds


# Rank

def test_rank_of_phi_plus(phi_plus_state):
    verdict = rank_criterion(phi_plus_state)
    assert not verdict.holds
    assert verdict.margin == -1.0


def test_rank_of_full_rank_state():
    assert rank_criterion(random_mixed(BipartiteDims(2, 3), None, make_rng(51))).holds


def test_rank_of_counterexample(counterexample):
    verdict = rank_criterion(counterexample)
    assert verdict.holds and verdict.margin == 0.0


# Majorization

def test_majorization_of_phi_plus(phi_plus_state):
    verdict = majorization(phi_plus_state, Side.A)
    assert not verdict.holds
    assert verdict.margin == pytest.approx(-0.5, abs=1e-12)
    assert "k=1" in verdict.witness


def test_majorization_of_werner():
    assert majorization(werner(3, 0.7), Side.A).holds


def test_majorization_of_certified_states():
    for trial in range(50):
        rho, _ = random_separable(BipartiteDims(2, 3), 6, make_rng(52, trial))
        for side in Side:
            assert majorization(rho, side).holds


# Entropic

def test_entropic_of_certified_states():
    for trial in range(20):
        rho, _ = random_separable(BipartiteDims(3, 3), 9, make_rng(53, trial))
        assert entropic(rho).holds


def test_entropic_of_phi_plus(phi_plus_state):
    verdict = entropic(phi_plus_state, "0.5,1,2,inf")
    assert not verdict.holds
    assert verdict.margin < 0
    assert verdict.witness.startswith("alpha=")


def test_entropic_of_counterexample(counterexample):
    assert entropic(counterexample).holds
    assert not ppt(counterexample).holds


def test_entropic_skips_negative_alpha(mixed_2x2):
    verdict = entropic(mixed_2x2, "-1,2")
    assert verdict.holds
    assert any("alpha<0" in note for note in verdict.notes)


def test_entropic_needs_a_nonnegative_alpha(mixed_2x2):
    with pytest.raises(ParameterRangeError):
        entropic(mixed_2x2, "-1")


# Chain report

def test_chain_of_odd_werner_state():
    report = chain_report(werner(3, 0.9))
    assert not report.verdict(CriterionName.ppt).holds
    assert all(report.verdict(name).holds for name in SPECTRAL)
    assert any(note.startswith("spectrally undetectable") for note in report.notes)
    assert report.consistency_violations == []


def test_chain_of_phi_plus(phi_plus_state):
    report = chain_report(phi_plus_state)
    assert not any(v.holds for v in report.verdicts)
    assert report.consistency_violations == []
    assert UNDISTILLABLE_NOTE in report.notes


def test_chain_with_certificate(mixed_2x2):
    report = chain_report(mixed_2x2)
    assert report.certificate is not None
    assert all(v.holds for v in report.verdicts)
    assert report.consistency_violations == []


def test_chain_rejects_wrong_certificate(mixed_2x2):
    wrong = SeparableEnsemble(np.array([1.0]), ((basis_projector(2, 0), basis_projector(2, 0)),))
    with pytest.raises(CertificateMismatchError):
        chain_report(mixed_2x2, certificate=wrong)


def test_chain_on_random_separable_states():
    for trial in range(100):
        dims = BipartiteDims(2 + trial % 2, 2 + (trial // 2) % 2)
        rho, _ = random_separable(dims, dims.total, make_rng(54, trial))
        report = chain_report(rho)
        assert all(v.holds for v in report.verdicts)
        assert report.consistency_violations == []


@pytest.mark.parametrize("dims", [BipartiteDims(2, 2), BipartiteDims(2, 3)])
def test_chain_on_random_mixed_states(dims):
    for trial in range(100):
        rho = random_mixed(dims, 1 + trial % dims.total, make_rng(55, trial))
        assert chain_report(rho).consistency_violations == []


def test_chain_comparator_warnings():
    rho = werner(3, 0.8)
    twin, _ = isospectral_werner(3, 0.8)
    assert chain_report(twin, comparator=rho).warnings == []
    other = random_mixed(BipartiteDims(3, 3), None, make_rng(56))
    warnings = chain_report(twin, comparator=other).warnings
    assert any("maximally chaotic" in w for w in warnings)


@pytest.mark.slow
@pytest.mark.parametrize("dims", [BipartiteDims(2, 2), BipartiteDims(2, 3)])
def test_mixed_campaign(dims):
    for trial in range(1000):
        rho = random_mixed(dims, 1 + trial % dims.total, make_rng(58, trial))
        assert chain_report(rho).consistency_violations == []


# Isospectral pairs and odd-dimension blindness

@pytest.mark.parametrize("d", [3, 5])
@pytest.mark.parametrize("p", [0.6, 0.8, 1.0])
def test_isospectral_pair_differs_only_on_ppt(d, p):
    rho = werner(d, p)
    twin, _ = isospectral_werner(d, p)
    distances = spectrally_equivalent(rho, twin)
    assert max(distances.values()) <= 1e-12
    assert not ppt(rho).holds
    assert ppt(twin).holds


def test_odd_werner_states_evade_every_spectral_criterion():
    for p in P_GRID:
        report = chain_report(werner(3, p))
        assert all(report.verdict(name).holds for name in SPECTRAL)
        assert report.verdict(CriterionName.ppt).holds == (p <= 0.5)
        assert report.consistency_violations == []


def test_explore_reduction_majorization():
    sample = explore_reduction_majorization(BipartiteDims(2, 2), 30, seed=3)
    assert sample.trials == 30
    assert sample.reduction_passing > 0
    assert all(0 <= trial < 30 for trial in sample.majorization_failures)


def test_maximally_mixed_passes_everything():
    report = chain_report(maximally_mixed(BipartiteDims(3, 2)))
    assert all(v.holds for v in report.verdicts)
