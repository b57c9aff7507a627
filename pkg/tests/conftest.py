# tests/conftest.py

import json

import pytest

from app.affine import make_affine
from app.enumeration import (
    BruteForceCount,
    CountMethodFactory,
    DerangementFormulaCount,
    EulerianFormulaCount,
)
from app.series import (
    Avoid3142Class,
    CatalanClass,
    ClassSpecFactory,
    CriticalExampleClass,
    FibonacciClass,
    FullClass,
    LayeredClass,
    SeparableClass,
)


@pytest.fixture(autouse=True)
def reset_registries():
    """
    Fixture to reset the count-method and class registries before each test.
    """
    # Clear existing registrations
    CountMethodFactory._methods.clear()
    ClassSpecFactory._classes.clear()

    # Re-register the defaults
    CountMethodFactory.register_method('a')(DerangementFormulaCount)
    CountMethodFactory.register_method('b')(EulerianFormulaCount)
    CountMethodFactory.register_method('brute')(BruteForceCount)
    for name, spec_class in [
        ('catalan', CatalanClass),
        ('layered', LayeredClass),
        ('separable', SeparableClass),
        ('s3142', Avoid3142Class),
        ('fibonacci2', FibonacciClass),
        ('full', FullClass),
        ('critical-example', CriticalExampleClass),
    ]:
        ClassSpecFactory.register_class(name)(spec_class)


@pytest.fixture
def figure_window():
    """The size-6 bounded affine permutation used across the affine and CLI tests."""
    return make_affine((2, 7, -2, -1, 9, 6))


@pytest.fixture
def class_file(tmp_path):
    """Write a JSON class description and return its path."""
    def write(payload, name="class.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload) if not isinstance(payload, str) else payload,
                        encoding="utf-8")
        return path
    return write
