# tests/test_series.py

"""
Unit tests for app.series.

Exact series arithmetic; the F -> G -> F~ transforms for the built-in
classes; block statistics against brute force over the classes; schema
classification (closed form and estimated); numeric diagnostics; the
bounded-total sequences and the bivariate generating function check.
"""

from fractions import Fraction
from math import comb, factorial, sqrt

import pytest
import sympy

from app.enumeration import count_bounded_affine, crites_3142_count, derangement_eulerian_table
from app.exceptions import (
    AffpermError,
    ClassificationError,
    ClassSpecError,
    InvariantViolation,
    SizeCapError,
)
from app.permcore import Perm, enumerate_avoiders, sum_blocks
from app.series import (
    CRITICAL,
    CRITICAL_UNCERTAIN,
    SUBCRITICAL,
    SUPERCRITICAL,
    X,
    CatalanClass,
    ClassSpec,
    ClassSpecFactory,
    CoefficientClass,
    LayeredClass,
    Series,
    affine_bounds_hold,
    affine_counts_convolution,
    affine_counts_log_derivative,
    affine_from_class,
    bivariate_check,
    block_count_moments,
    block_distribution,
    bounded_total_diagnostics,
    bounded_totals,
    check_bounded_formulas,
    checkpoints,
    class_from_indecomposables,
    derangement_moments,
    enasym_target,
    estimate_radius,
    first_block_distribution,
    indecomposables_from_class,
    limiting_block_law,
    load_class_spec,
    q_target,
    q_values,
    schema_classify,
    subcritical_diagnostics,
    supercritical_diagnostics,
)

BUILT_INS = ("catalan", "layered", "separable", "s3142", "fibonacci2", "full", "critical-example")


def ints(series: Series, start: int = 0):
    return list(series.as_integers()[start:])


# -----------------------------------------------------------------------------------
# Series arithmetic
# -----------------------------------------------------------------------------------

def test_series_arithmetic():
    # Arrange
    a = Series([1, 2, 3])
    b = Series([1, -1, 0, 5])

    # Act & Assert
    assert ints(a + b) == [2, 1, 3]
    assert ints(a - b) == [0, 3, 3]
    assert ints(a * b) == [1, 1, 1]
    assert ints(2 * a) == [2, 4, 6]
    assert ints(1 - a) == [0, -2, -3]
    assert (a / 2).coefficients == (Fraction(1, 2), Fraction(1), Fraction(3, 2))


def test_reciprocal_and_division():
    geometric = Series([1, -1, 0, 0, 0]).reciprocal()
    assert ints(geometric) == [1, 1, 1, 1, 1]
    halves = Series([2, 1, 0]).reciprocal()
    assert halves.coefficients == (Fraction(1, 2), Fraction(-1, 4), Fraction(1, 8))
    assert ints(Series([1, 1, 1]) / Series([1, 1, 1])) == [1, 0, 0]
    assert ints(1 / Series([1, -1, 0])) == [1, 1, 1]


def test_reciprocal_needs_constant_term():
    with pytest.raises(AffpermError):
        Series([0, 1]).reciprocal()


def test_derivatives():
    s = Series([1, 1, 2, 5])
    assert ints(s.derivative()) == [1, 4, 15]
    assert ints(s.x_derivative()) == [0, 1, 4, 15]
    assert ints(Series([3]).derivative()) == [0]
    assert ints(Series([1, -1, 0, 0]).reciprocal().x_log_derivative()) == [0, 1, 1, 1]


@pytest.mark.parametrize(
    "base, exponent, expected",
    [
        ([1, -4, 0, 0, 0], Fraction(1, 2), [1, -2, -2, -4, -10]),
        ([1, 1, 0, 0], 3, [1, 3, 3, 1]),
        ([1, 1, 0, 0], -1, [1, -1, 1, -1]),
        ([1, -8, 0, 0], Fraction(3, 2), [1, -12, 24, 32]),
    ]
)
def test_power(base, exponent, expected):
    assert ints(Series(base).power(exponent)) == expected


def test_power_needs_unit_constant():
    with pytest.raises(AffpermError):
        Series([2, 1]).power(Fraction(1, 2))


def test_series_helpers():
    s = Series([0, 0, 1, 2])
    assert ints(s.shift_down(2)) == [1, 2]
    with pytest.raises(AffpermError):
        s.shift_down(3)
    assert s.evaluate(Fraction(1, 2)) == Fraction(1, 2)
    assert s.order == 3 and len(s) == 4 and s[-1] == 0
    assert s.truncate(1) == Series([0, 0])
    assert Series.monomial(2, 3) == Series([0, 0, 1, 0])
    assert Series.constant(5, 1) == Series([5, 0])
    with pytest.raises(AffpermError):
        Series([])
    with pytest.raises(AffpermError):
        Series([Fraction(1, 2)]).as_integers()


# -----------------------------------------------------------------------------------
# Transforms
# -----------------------------------------------------------------------------------

@pytest.mark.parametrize(
    "f, g",
    [
        ([1, 1, 2, 5, 14], [0, 1, 1, 2, 5]),
        ([1, 1, 2, 4, 8], [0, 1, 1, 1, 1]),
        ([1, 1, 1, 1, 1], [0, 1, 0, 0, 0]),
    ]
)
def test_indecomposables_from_class(f, g):
    assert ints(indecomposables_from_class(Series(f))) == g
    assert ints(class_from_indecomposables(Series(g))) == f


def test_transforms_check_constant_terms():
    with pytest.raises(ClassSpecError):
        indecomposables_from_class(Series([2, 1]))
    with pytest.raises(ClassSpecError):
        class_from_indecomposables(Series([1, 1]))


def test_negative_indecomposables_are_logged(caplog):
    indecomposables_from_class(Series([1, 1, 0, 0]))
    assert "negative" in caplog.text


@pytest.mark.parametrize(
    "name, expected",
    [
        ("catalan", [1, 3, 10, 35, 126]),
        ("layered", [1, 3, 7, 15, 31]),
        ("separable", [1, 3, 13, 63, 321]),
        ("s3142", [1, 3, 13, 67, 381]),
        ("fibonacci2", [1, 3, 4, 7, 11]),
        ("full", [1, 3, 13, 71, 461]),
    ]
)
def test_affine_from_class_small(name, expected):
    spec = ClassSpecFactory.create_class(name)
    assert ints(spec.affine_series(5), 1) == expected


def test_catalan_affine_counts_are_half_central_binomials():
    affine = CatalanClass().affine_series(200)
    assert all(affine[n] == comb(2 * n, n) // 2 for n in range(1, 201))


def test_layered_affine_counts_are_mersenne():
    affine = LayeredClass().affine_series(200)
    assert all(affine[n] == 2 ** n - 1 for n in range(1, 201))


def test_s3142_affine_counts_match_closed_forms():
    # Arrange
    order = 30
    affine = ClassSpecFactory.create_class("s3142").affine_series(order)
    root = Series([1, -8] + [0] * (order - 1)).power(Fraction(1, 2))
    closed = (1 - 2 * Series.monomial(1, order) - root) / (2 * Series([1, 1] + [0] * (order - 1)))

    # Act & Assert
    assert affine == closed
    assert all(affine[n] == crites_3142_count(n) for n in range(1, order + 1))


def test_separable_indecomposables_are_half_the_class():
    spec = ClassSpecFactory.create_class("separable")
    f, g = spec.f_series(30), spec.g_series(30)
    assert all(2 * g[n] == f[n] for n in range(2, 31))


@pytest.mark.slow
@pytest.mark.parametrize("name", BUILT_INS)
def test_affine_computations_agree_and_respect_bounds(name):
    # Arrange
    spec = ClassSpecFactory.create_class(name)
    f = spec.f_series(200)
    g = spec.g_series(200)

    # Act
    by_log = affine_counts_log_derivative(f)
    by_sum = affine_counts_convolution(f, g)

    # Assert
    assert by_log == by_sum
    assert affine_bounds_hold(f, g, by_log)


def test_affine_from_class_detects_disagreement(monkeypatch):
    monkeypatch.setattr("app.series.affine_counts_convolution", lambda f, g=None: Series([0] * len(f)))
    with pytest.raises(InvariantViolation):
        affine_from_class(Series([1, 1, 2]))


@pytest.mark.slow
@pytest.mark.parametrize(
    "spec_class, patterns",
    [
        (CatalanClass, ["321"]),
        (LayeredClass, ["312", "231"]),
    ]
)
@pytest.mark.parametrize("n", range(1, 9))
def test_first_block_and_block_count_sums(spec_class, patterns, n):
    # Arrange
    members = list(enumerate_avoiders(n, [Perm.parse(p) for p in patterns]))
    affine = spec_class().affine_series(n)

    # Act
    first_blocks = sum(sum_blocks(p).first_block_size for p in members)
    inverse_counts = sum(Fraction(1, sum_blocks(p).block_count) for p in members)

    # Assert
    assert first_blocks == affine[n]
    assert n * inverse_counts == affine[n]


# -----------------------------------------------------------------------------------
# Block statistics
# -----------------------------------------------------------------------------------

def test_block_distribution_layered():
    f = LayeredClass().f_series(3)
    assert block_distribution(f, 3) == (0, Fraction(1, 4), Fraction(1, 2), Fraction(1, 4))


def test_block_distribution_identity_class():
    distribution = block_distribution(Series([1] * 7), 6)
    assert distribution[6] == 1
    assert sum(distribution) == 1


def test_block_distribution_matches_brute_force():
    # Arrange
    n = 6
    members = list(enumerate_avoiders(n, [Perm.parse("321")]))
    f = CatalanClass().f_series(n)

    # Act
    distribution = block_distribution(f, n)

    # Assert
    for k in range(n + 1):
        count = sum(1 for p in members if sum_blocks(p).block_count == k)
        assert distribution[k] == Fraction(count, len(members))


def test_first_block_distribution_catalan():
    f = CatalanClass().f_series(4)
    assert first_block_distribution(f, 4) == (
        0, Fraction(5, 14), Fraction(2, 14), Fraction(2, 14), Fraction(5, 14)
    )
    assert first_block_distribution(Series([1] * 5), 4)[1] == 1


def test_distribution_errors():
    with pytest.raises(AffpermError):
        block_distribution(Series([1, 1]), 3)
    with pytest.raises(AffpermError):
        first_block_distribution(Series([1, 1]), 0)
    with pytest.raises(AffpermError):
        block_distribution(Series([1, 0, 1]), 1)


@pytest.mark.parametrize("name", ["catalan", "layered", "separable"])
def test_distributions_sum_to_one(name):
    f = ClassSpecFactory.create_class(name).f_series(12)
    for n in range(1, 13):
        assert sum(block_distribution(f, n)) == 1
        assert sum(first_block_distribution(f, n)) == 1


def test_block_count_moments_match_distribution():
    f = CatalanClass().f_series(10)
    moments = block_count_moments(f)
    for n in range(1, 11):
        distribution = block_distribution(f, n)
        mean = sum(k * p for k, p in enumerate(distribution))
        square = sum(k * k * p for k, p in enumerate(distribution))
        assert moments[n].mean == mean
        assert moments[n].variance == square - mean * mean


def test_layered_block_counts_are_binomial():
    moments = block_count_moments(LayeredClass().f_series(20))
    for n in range(1, 21):
        assert moments[n].mean == Fraction(n + 1, 2)
        assert moments[n].variance == Fraction(n - 1, 4)


def test_catalan_block_law_approaches_negative_binomial():
    f = CatalanClass().f_series(120)
    distribution = block_distribution(f, 120)
    for k in (1, 2, 3):
        assert float(distribution[k]) == pytest.approx(limiting_block_law(0.5, k), rel=0.02)
    assert limiting_block_law(0.5, 1) == 0.25


def test_catalan_first_block_of_size_one_tends_to_a_quarter():
    f = CatalanClass().f_series(400)
    assert float(first_block_distribution(f, 400)[1]) == pytest.approx(0.25, rel=0.01)


# -----------------------------------------------------------------------------------
# Class specifications
# -----------------------------------------------------------------------------------

def test_factory_lists_built_ins():
    assert ClassSpecFactory.available() == BUILT_INS


def test_unknown_class():
    with pytest.raises(ClassSpecError) as exc_info:
        ClassSpecFactory.create_class("nonsense")
    assert "catalan" in str(exc_info.value)


def test_register_class_twice_fails():
    with pytest.raises(ValueError):
        ClassSpecFactory.register_class("catalan")(CatalanClass)


def test_register_custom_class():
    # Arrange
    @ClassSpecFactory.register_class("singletons")
    class Singletons(ClassSpec):
        def g_series(self, order):
            return Series([0, 1] + [0] * (order - 1))

    # Act
    spec = ClassSpecFactory.create_class("Singletons")

    # Assert
    assert ints(spec.f_series(4)) == [1, 1, 1, 1, 1]
    assert ints(spec.affine_series(4), 1) == [1, 1, 1, 1]
    assert repr(spec) == "Singletons(name='singletons')"


def test_load_class_spec_from_f(class_file):
    path = class_file({"name": "cat", "f": [1, 1, 2, 5, 14, 42]})
    spec = load_class_spec(path)
    assert spec.name == "cat"
    assert ints(spec.g_series(5)) == [0, 1, 1, 2, 5, 14]
    assert ints(spec.affine_series(5), 1) == [1, 3, 10, 35, 126]


def test_load_class_spec_from_g_via_factory(class_file):
    path = class_file({"g": [0, 1, 1, 0, 0, 0]}, name="fib.json")
    spec = ClassSpecFactory.create_class(f"file:{path}")
    assert spec.name == "fib"
    assert ints(spec.f_series(5)) == [1, 1, 2, 3, 5, 8]


@pytest.mark.parametrize(
    "payload",
    [
        {"name": "both", "f": [1, 1], "g": [0, 1]},
        {"name": "neither"},
        {"name": "bad f0", "f": [2, 1]},
        {"name": "bad g0", "g": [1, 1]},
        {"name": "floats", "f": [1, 1.5]},
        [1, 2, 3],
        "{not json",
    ]
)
def test_load_class_spec_rejects(class_file, payload):
    with pytest.raises(ClassSpecError):
        load_class_spec(class_file(payload))


def test_load_class_spec_missing_file(tmp_path):
    with pytest.raises(ClassSpecError):
        load_class_spec(tmp_path / "missing.json")


def test_coefficient_class_order_limit():
    spec = CoefficientClass("short", f=[1, 1, 2])
    with pytest.raises(ClassSpecError):
        spec.f_series(5)


# -----------------------------------------------------------------------------------
# Classification
# -----------------------------------------------------------------------------------

def test_classify_catalan():
    report = schema_classify(CatalanClass(), 64)
    assert report.classification == SUBCRITICAL
    assert report.tau_text == "1/2"
    assert report.radius == 0.25
    assert report.exact
    assert report.rho is None
    assert report.lines()[0] == "catalan: subcritical tau=1/2 r=0.25"


def test_classify_layered():
    report = schema_classify(LayeredClass(), 64)
    assert report.classification == SUPERCRITICAL
    assert report.tau_text == "inf"
    assert report.rho == pytest.approx(0.5, abs=1e-12)
    assert report.alpha == pytest.approx(0.5, abs=1e-12)
    assert report.beta == pytest.approx(0.25, abs=1e-12)
    assert report.g_at_rho == pytest.approx(1.0)
    assert report.rho < report.radius


def test_classify_fibonacci():
    report = schema_classify(ClassSpecFactory.create_class("fibonacci2"), 32)
    assert report.classification == SUPERCRITICAL
    assert report.rho == pytest.approx((sqrt(5) - 1) / 2, abs=1e-6)


def test_classify_critical_example():
    report = schema_classify(ClassSpecFactory.create_class("critical-example"), 32)
    assert report.classification == CRITICAL
    assert report.tau_text == "1"


class NearlyCriticalClass(ClassSpec):
    """Catalan indecomposables scaled by 199/100, so tau = 199/200 exactly."""

    name = "nearly-critical"
    g_closed = sympy.Rational(199, 100) * (1 - sympy.sqrt(1 - 4 * X)) / 2
    radius = sympy.Rational(1, 4)

    def g_series(self, order):
        return CatalanClass().g_series(order) * Fraction(199, 100)


@pytest.mark.parametrize(
    "tolerance, expected",
    [
        (None, CRITICAL_UNCERTAIN),
        (Fraction(1, 100), CRITICAL_UNCERTAIN),
        (Fraction(1, 1000), SUBCRITICAL),
    ]
)
def test_closed_form_tau_inside_the_band_is_uncertain(tolerance, expected):
    # Act
    report = schema_classify(NearlyCriticalClass(), 32, tolerance=tolerance)

    # Assert
    assert report.exact
    assert report.tau_text == "199/200"
    assert report.classification == expected
    assert report.rho is None


@pytest.mark.parametrize(
    "name, tau",
    [
        ("separable", 1 - 1 / sqrt(2)),
        ("s3142", 5 / 32),
    ]
)
def test_classify_other_subcritical(name, tau):
    report = schema_classify(ClassSpecFactory.create_class(name), 32)
    assert report.classification == SUBCRITICAL
    assert report.tau == pytest.approx(tau, abs=1e-12)


def test_s3142_tau_is_exact():
    assert schema_classify(ClassSpecFactory.create_class("s3142"), 16).tau_text == "5/32"


def test_classify_estimated_catalan():
    f = CatalanClass().f_series(40)
    spec = CoefficientClass("catalan-file", f=[int(c) for c in f])
    report = schema_classify(spec, 40)
    assert not report.exact
    assert report.classification == SUBCRITICAL
    assert 0.24 < report.radius < 0.27


def test_classify_estimated_polynomial_blocks():
    spec = CoefficientClass("fib-file", g=[0, 1, 1] + [0] * 18)
    report = schema_classify(spec, 20)
    assert report.classification == SUPERCRITICAL
    assert report.radius == float("inf")
    assert report.rho == pytest.approx((sqrt(5) - 1) / 2, abs=1e-6)


def test_classify_estimated_critical_band():
    # Tail ratios are exactly 1/2, so tau = 1/2 + 2/4 + 5/4096.
    spec = CoefficientClass("band", g=[0, 1, 2] + [0] * 9 + [1, 2, 4, 8, 16])
    report = schema_classify(spec, 16, tolerance=Fraction(1, 100))
    assert report.radius == 0.5
    assert report.classification == CRITICAL_UNCERTAIN
    assert report.tau == pytest.approx(1 + 5 / 4096)


def test_classify_requires_enough_terms():
    with pytest.raises(ClassSpecError):
        schema_classify(CatalanClass(), 8)


def test_classify_rejects_degenerate_class():
    with pytest.raises(ClassSpecError):
        schema_classify(CoefficientClass("empty", g=[0] * 20), 16)


def test_estimate_radius():
    assert estimate_radius(Series([0, 1, 2, 4, 8, 16, 32, 64, 128])) == 0.5
    assert estimate_radius(Series([0, 1, 0, 0, 0])) == float("inf")


def test_schema_report_to_dict_is_json_ready():
    data = schema_classify(LayeredClass(), 16).to_dict()
    assert data["tau"] == "inf"
    assert data["classification"] == SUPERCRITICAL
    assert data["rho"] == pytest.approx(0.5)


# -----------------------------------------------------------------------------------
# Diagnostics
# -----------------------------------------------------------------------------------

def test_checkpoints():
    assert checkpoints(1000) == (250, 500, 1000)
    assert checkpoints(2) == (1, 1, 2)


def test_subcritical_diagnostics_separable_exact_ratio():
    report = subcritical_diagnostics(ClassSpecFactory.create_class("separable"), 40)
    assert report["g/f"].last_value == pytest.approx(0.5)
    assert report["g/f"].target == pytest.approx(0.5)
    assert report["g/f"].approaches


@pytest.mark.slow
def test_subcritical_diagnostics_catalan_at_one_thousand():
    # Act
    report = subcritical_diagnostics(CatalanClass(), 1000)

    # Assert
    ratio = report["g/f"]
    assert [n for n, _ in ratio.checkpoints] == [250, 500, 1000]
    assert ratio.last_value == pytest.approx(0.25, rel=0.02)
    assert ratio.non_increasing
    assert ratio.approaches
    affine = report["ftilde/((1-tau)nf)"]
    assert affine.last_value == pytest.approx(1.0, rel=0.02)
    assert affine.approaches


def test_supercritical_diagnostics_layered():
    # Act
    report = supercritical_diagnostics(LayeredClass(), 50)

    # Assert
    assert report["ftilde*rho^n"].last_value == pytest.approx(1.0, abs=1e-3)
    assert report["f*rho^n"].last_value == pytest.approx(0.5, abs=1e-9)
    assert report["mean_blocks/n"].last_value == pytest.approx(0.51)
    assert report["var_blocks/n"].last_value == pytest.approx(0.245)
    assert report["ftilde*rho^n"].approaches


def test_diagnostics_reject_wrong_regime():
    with pytest.raises(ClassificationError):
        subcritical_diagnostics(LayeredClass(), 20)
    with pytest.raises(ClassificationError):
        supercritical_diagnostics(CatalanClass(), 20)


def test_diagnostics_report_output():
    report = supercritical_diagnostics(LayeredClass(), 16)
    assert report.lines()[0].startswith("f*rho^n target=0.5")
    assert report.to_dict()["name"] == "layered"
    with pytest.raises(KeyError):
        report["missing"]


# -----------------------------------------------------------------------------------
# All bounded affine permutations
# -----------------------------------------------------------------------------------

def test_q_values_small():
    q = q_values(4)
    assert q[0] == 1
    assert q[1] == 0
    assert q[2] == Fraction(1, 4)


def test_bounded_totals_match_counts():
    totals = bounded_totals(12)
    assert totals[0] == 0
    assert list(totals[1:]) == [count_bounded_affine(n) for n in range(1, 13)]


def test_check_bounded_formulas():
    assert check_bounded_formulas(25)


def test_bounded_total_diagnostics_targets():
    report = bounded_total_diagnostics(40)
    assert report["sqrt(m)Q_m"].target == pytest.approx(q_target())
    assert report["total*sqrt(n)/(2^n n!)"].target == pytest.approx(enasym_target())
    assert q_target() == pytest.approx(0.25418, abs=1e-4)
    with pytest.raises(AffpermError):
        bounded_total_diagnostics(3)


@pytest.mark.slow
def test_bounded_totals_approach_their_asymptotics():
    # Arrange
    q = q_values(400)
    totals = bounded_totals(60)

    def total_gap(n):
        return abs(sqrt(n) * (totals[n] / (2 ** n * factorial(n))) - enasym_target())

    def q_gap(m):
        return abs(sqrt(m) * float(q[m]) - q_target())

    # Act & Assert
    assert total_gap(60) < total_gap(30)
    assert q_gap(400) < q_gap(100)
    assert sqrt(200) * float(q[200]) == pytest.approx(q_target(), rel=0.1)


def test_derangement_moments():
    for n in (4, 10, 20, 40):
        assert derangement_moments(n).mean == Fraction(n, 2)
    gaps = [abs(float(derangement_moments(n).variance) / n - 1 / 12) for n in (10, 20, 40)]
    assert gaps[0] > gaps[1] > gaps[2]
    with pytest.raises(AffpermError):
        derangement_moments(1)


# -----------------------------------------------------------------------------------
# Bivariate generating functions
# -----------------------------------------------------------------------------------

def test_bivariate_check():
    # Act
    report = bivariate_check(10)

    # Assert
    assert report.ok
    assert report.eulerian_rows[0] == (1,)
    assert report.eulerian_rows[3] == (1, 4, 1, 0)
    assert report.derangement_rows[4] == (0, 1, 7, 1, 0)
    assert report.derangement_rows == derangement_eulerian_table(10).rows


def test_bivariate_check_cap():
    with pytest.raises(SizeCapError):
        bivariate_check(13)
