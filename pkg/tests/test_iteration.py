import numpy as np
import pytest

from cwpower.errors import (
    PositivityError,
    ShapeError,
    ShiftCollisionError,
    ShiftTooSmallError,
    StateError,
    UnsupportedCriterionError,
)
from cwpower.grid import unit_square
from cwpower.iteration import (
    Criterion,
    IterationState,
    SolverConfig,
    StoppingRule,
    Update,
    collatz_wielandt,
    evaluate_stop,
    fixed_shift_power,
    grid_epsilon,
    mu_matches_sup,
    plain_power,
    rayleigh_quotient_iteration,
    residual,
    variable_lambda_power,
)
from cwpower.operators import DenseMatrix, InverseLaplacian, hilbert_matrix
from cwpower.report import StopReason

from conftest import discrete_square_lambda

A12 = DenseMatrix([[1, 2], [2, 1]])
A21 = DenseMatrix([[2, 1], [1, 2]])


# -- Collatz-Wielandt bounds -------------------------------------------------


def test_bounds_hilbert3_ones():
    b = collatz_wielandt(hilbert_matrix(3), np.ones(3))
    assert b.lower == pytest.approx(47 / 60, rel=1e-15)
    assert b.upper == pytest.approx(11 / 6, rel=1e-15)
    assert (b.argmin_index, b.argmax_index) == (2, 0)


def test_bounds_eigenvector():
    b = collatz_wielandt(A21, [1.0, 1.0])
    assert b.lower == b.upper == 3.0
    assert b.gap == 0.0


def test_bounds_rejects_nonpositive():
    with pytest.raises(PositivityError):
        collatz_wielandt(A21, [1.0, 0.0])
    with pytest.raises(ShapeError):
        collatz_wielandt(A21, [1.0, 1.0, 1.0])


def test_bounds_ties_go_to_smallest_index():
    b = collatz_wielandt(DenseMatrix(np.ones((3, 3))), [1.0, 1.0, 1.0])
    assert (b.argmin_index, b.argmax_index) == (0, 0)


# -- variable-shift iteration -------------------------------------------------


def test_cw_two_by_two_first_step():
    rep = variable_lambda_power(A12, [2.0, 1.0], SolverConfig(StoppingRule(Criterion.LAMBDA_DIFF, 1e-14, 1)))
    assert rep.initial_lambda == 5.0
    # step 1 is kept only as the confirming step when max_iters = 1; rerun with more
    rep = variable_lambda_power(A12, [2.0, 1.0], SolverConfig(StoppingRule(Criterion.SC1, 1e-14, 30)))
    assert rep.records[0].lam == pytest.approx(3.5, rel=1e-15)
    np.testing.assert_allclose(rep.iterates[0], np.array([5 / 6, 2 / 3]) / np.hypot(5 / 6, 2 / 3), rtol=1e-15)
    assert rep.lam == pytest.approx(3.0, rel=1e-14)
    assert rep.stop_reason is StopReason.CRITERION_MET


def test_cw_eigenvector_start():
    rep = variable_lambda_power(A21, [1.0, 1.0])
    assert rep.stop_reason is StopReason.EIGENVECTOR_START
    assert rep.lam == 3.0
    assert rep.iterations == 0
    np.testing.assert_allclose(rep.vector, [2**-0.5, 2**-0.5])


def test_cw_mu_update_two_by_two():
    cfg = SolverConfig(StoppingRule(Criterion.SC1, 1e-14, 30), Update.MU)
    rep = variable_lambda_power(A12, [2.0, 1.0], cfg)
    # mu_1 = 5 - min(2/(5/6), 1/(2/3)) = 3.5
    assert rep.records[0].lam == pytest.approx(3.5, rel=1e-15)
    assert rep.algorithm == "cw-mu"


def test_cw_rejects_nonpositive_start():
    with pytest.raises(PositivityError):
        variable_lambda_power(A12, [1.0, 0.0])


def test_cw_max_iters():
    rep = variable_lambda_power(hilbert_matrix(50), np.ones(50), SolverConfig(StoppingRule(Criterion.SC1, 1e-300, 3)))
    assert rep.stop_reason is StopReason.MAX_ITERS
    assert not rep.converged
    assert rep.iterations == 3


def test_cw_dlambda_convention():
    # the confirming step is discarded: output is lam_n with |lam_{n+1} - lam_n| < eps
    H = hilbert_matrix(100)
    rep = variable_lambda_power(H, np.ones(100), SolverConfig(StoppingRule(Criterion.LAMBDA_DIFF, 1e-14, 50)))
    assert rep.stop_reason is StopReason.CRITERION_MET
    assert rep.records[-1].criterion < 1e-14
    assert all(r.criterion >= 1e-14 for r in rep.records[:-1])
    assert rep.lam == rep.records[-1].lam
    lam_star = np.linalg.eigvalsh(H.entries).max()
    assert abs(rep.lam - lam_star) < 1e-13 * lam_star


def test_cw_single_node_grid_is_eigenvector_start():
    # h = 1/2: one node, T = 1/16, every positive vector is an eigenvector
    op = InverseLaplacian(unit_square(0.5))
    rep = variable_lambda_power(op, np.ones(1))
    assert rep.stop_reason is StopReason.EIGENVECTOR_START
    assert rep.lam == pytest.approx(1 / 16)


class _CollidesOnSecondSolve(DenseMatrix):
    calls = 0

    def shifted_solve(self, lam, v, check_positive=True, definite=True):
        self.calls += 1
        if self.calls == 2:
            raise ShiftCollisionError(lam, "singular")
        return super().shifted_solve(lam, v, check_positive, definite)


def test_cw_shift_collision_reported_converged():
    op = _CollidesOnSecondSolve([[1, 2], [2, 1]])
    rep = variable_lambda_power(op, [2.0, 1.0], SolverConfig(StoppingRule(Criterion.SC1, 1e-14, 30)))
    assert rep.stop_reason is StopReason.SHIFT_COLLISION
    assert rep.converged
    assert rep.iterations == 1
    assert rep.lam == pytest.approx(3.5)


class _FlipsSignOnSecondSolve(DenseMatrix):
    calls = 0

    def shifted_solve(self, lam, v, check_positive=True, definite=True):
        self.calls += 1
        w = super().shifted_solve(lam, v, check_positive, definite)
        return -w if self.calls == 2 else w


def test_cw_positivity_loss_with_open_gap_raises():
    op = _FlipsSignOnSecondSolve([[1, 2], [2, 1]])
    with pytest.raises(PositivityError):
        variable_lambda_power(op, [2.0, 1.0])


@pytest.mark.parametrize("h", [1 / 4, 1 / 10])
def test_cw_grid_converges_to_analytic(h):
    op = InverseLaplacian(unit_square(h))
    v0 = op.apply(np.ones(op.dimension))
    rep = variable_lambda_power(op, v0, SolverConfig(StoppingRule(Criterion.SC2, 1e-14, 50)))
    assert rep.converged
    assert rep.lam == pytest.approx(discrete_square_lambda(h), rel=1e-12)
    assert rep.algorithm == "cw-mu"


def test_grid_epsilon():
    assert grid_epsilon(0.1) == pytest.approx(1e-3)


def test_stopping_rule_validation():
    with pytest.raises(ValueError):
        StoppingRule(Criterion.SC1, 0.0)
    with pytest.raises(ValueError):
        StoppingRule(Criterion.SC1, 1e-3, 0)
    assert StoppingRule("sc2").kind is Criterion.SC2


# -- mu / sup equivalence -----------------------------------------------------


def test_mu_matches_sup_examples():
    assert mu_matches_sup(A12, [2.0, 1.0], 1)
    assert mu_matches_sup(hilbert_matrix(50), np.ones(50), 5)
    assert mu_matches_sup(A21, [1.0, 1.0], 0)


# -- fixed shift --------------------------------------------------------------


def test_fixed_shift_linear_rate():
    rep = fixed_shift_power(A12, [2.0, 1.0], 5.0, StoppingRule(Criterion.SC1, 1e-13, 200))
    assert rep.converged
    target = np.array([1.0, 1.0]) / np.sqrt(2)
    angles = [np.arccos(min(1.0, v @ target)) for v in rep.iterates]
    # stay well above round-off in the angle
    ratios = [b / a for a, b in zip(angles, angles[1:]) if b > 1e-6]
    assert len(ratios) >= 5
    np.testing.assert_allclose(ratios[2:], 1 / 3, rtol=1e-3)
    assert rep.lam == pytest.approx(3.0, rel=1e-12)


def test_fixed_shift_eigenvector_start():
    rep = fixed_shift_power(A21, [1.0, 1.0], 4.0, StoppingRule(Criterion.SC1, 1e-14, 10))
    assert rep.iterations == 1
    assert rep.lam == pytest.approx(3.0)


def test_fixed_shift_too_small():
    with pytest.raises(ShiftTooSmallError):
        fixed_shift_power(A12, [2.0, 1.0], 3.0)
    with pytest.raises(ShiftTooSmallError):
        fixed_shift_power(A12, [1.0, 1.0], 3.0)
    with pytest.raises(ShiftTooSmallError):
        fixed_shift_power(A12, [1.0, 1.0], 2.0)


# -- plain power --------------------------------------------------------------


def test_plain_power_two_by_two():
    rep = plain_power(A21, [1.0, 0.5], StoppingRule(Criterion.SC1, 1e-14, 1000))
    assert rep.lam == pytest.approx(3.0, rel=1e-14)


def test_plain_power_grid():
    op = InverseLaplacian(unit_square(0.25))
    rep = plain_power(op, np.ones(9), StoppingRule(Criterion.SC1, 1e-14, 10_000))
    assert rep.lam == pytest.approx(1 / (128 * np.sin(np.pi / 8) ** 2), rel=1e-12)
    assert rep.lam == pytest.approx(0.0533471, abs=1e-7)


def test_plain_power_eigenvector_and_sc2():
    assert plain_power(A21, [1.0, 1.0]).stop_reason is StopReason.EIGENVECTOR_START
    with pytest.raises(UnsupportedCriterionError):
        plain_power(A21, [1.0, 0.5], StoppingRule(Criterion.SC2))


# -- Rayleigh -----------------------------------------------------------------


def test_rayleigh_rejects_positive_criteria():
    for c in (Criterion.SC1, Criterion.SC2):
        with pytest.raises(UnsupportedCriterionError):
            rayleigh_quotient_iteration(A21, [1.0, 0.5], StoppingRule(c))


def test_rayleigh_eigenvector_start():
    # the Rayleigh quotient of (1, 1) is 3 up to round-off; the run stops at once,
    # either on a singular shift or on the confirming step
    rep = rayleigh_quotient_iteration(A21, [1.0, 1.0])
    assert rep.stop_reason in (StopReason.SHIFT_COLLISION, StopReason.CRITERION_MET)
    assert rep.iterations <= 1
    assert rep.lam == pytest.approx(3.0, rel=1e-15)


def test_rayleigh_accepts_mixed_sign_start():
    rep = rayleigh_quotient_iteration(A12, [1.0, -0.9])
    assert rep.converged
    assert rep.lam == pytest.approx(-1.0, abs=1e-12)


# -- stopping criteria --------------------------------------------------------


def test_evaluate_stop_eigenvector_sc1():
    state = IterationState(0, 3.0, np.array([1.0, 1.0]) / np.sqrt(2))
    fired, value = evaluate_stop(StoppingRule(Criterion.SC1, 1e-14), A21, state)
    assert fired and value == 0.0


def test_evaluate_stop_state_errors():
    state = IterationState(0, 3.0, np.array([0.6, 0.8]))
    with pytest.raises(StateError):
        evaluate_stop(StoppingRule(Criterion.SC2), A21, state)
    with pytest.raises(StateError):
        evaluate_stop(StoppingRule(Criterion.LAMBDA_DIFF), A21, state)


def test_sc1_equals_sc2_on_grid():
    op = InverseLaplacian(unit_square(1 / 8))
    rep = variable_lambda_power(op, op.apply(np.ones(op.dimension)), SolverConfig(StoppingRule(Criterion.SC2, 1e-14, 20)))
    for r in rep.records:
        assert abs(r.criterion - r.gap) <= 1e-12


def test_residual_examples():
    v = np.ones(3) / np.sqrt(3)
    H = hilbert_matrix(3)
    lam = 11 / 6
    expected = np.linalg.norm(H.entries @ v - lam * v)
    assert residual(H, IterationState(0, lam, v)) == pytest.approx(expected, rel=1e-14)
    assert expected > 0
    assert residual(A21, IterationState(0, 3.0, np.array([1.0, 1.0]) / np.sqrt(2))) < 1e-15
