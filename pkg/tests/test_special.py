import numpy as np
import pytest
import scipy.special

from risvi.special import bessel_k0


def test_matches_reference_on_working_range():
    x = np.concatenate([np.logspace(-6, np.log10(50), 3000), [1.9999999, 2.0, 2.0000001]])
    np.testing.assert_allclose(bessel_k0(x), scipy.special.k0(x), rtol=1e-10)


def test_scalar_and_zero():
    assert isinstance(bessel_k0(1.0), float)
    assert bessel_k0(0.0) == np.inf


def test_negative_argument():
    with pytest.raises(ValueError):
        bessel_k0(-1.0)
