import numpy as np
import pytest

from monotone_sme.errors import ConfigError
from monotone_sme.shocks import Shock, ShockSpec, ShockStream, gaussian, truncated_gaussian, uniform


def test_stream_is_reproducible_and_prefix_stable():
    a = ShockStream(7, 2).matrix(5000)
    b = ShockStream(7, 2).matrix(5000)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(ShockStream(7, 2).matrix(100), a[:100])
    assert np.all((a > 0) & (a < 1))


def test_stream_ids_differ():
    a = ShockStream(7, 1, 0).matrix(100)
    b = ShockStream(7, 1, 1).matrix(100)
    assert not np.array_equal(a, b)


def test_quantiles_are_increasing_in_u():
    u = np.linspace(0.001, 0.999, 500)[:, None]
    for shock in (gaussian(0.0, 2.0), uniform(-1.0, 3.0), truncated_gaussian(0.0, 1.0, -0.5, 2.0)):
        q = ShockSpec([shock]).transform(u, np.zeros(1))[:, 0]
        assert np.all(np.diff(q) > 0)


def test_linked_sd_reads_theta():
    spec = ShockSpec([gaussian(0.0, link={"sd": 1})])
    u = np.array([[0.8]])
    small = spec.transform(u, np.array([0.3, 0.1]))
    big = spec.transform(u, np.array([0.3, 0.2]))
    assert big[0, 0] == pytest.approx(2 * small[0, 0])


def test_bad_shock_params():
    with pytest.raises(ConfigError):
        Shock("cauchy", {})
    with pytest.raises(ConfigError):
        Shock("gaussian", {"mean": 0.0})
