import math

import numpy as np
import pytest

from thztomo.model import (GridSpec, MaterialField, ScanGeometry,
                           absorbance_from_tau, alpha_from_kappa,
                           kappa_from_alpha, path_difference_integrand,
                           read_grid_channel, write_grid_channel)


class TestKappa:
    def test_zero(self):
        assert kappa_from_alpha(0.0, 100e9) == 0.0

    def test_reference_value(self):
        # alpha = 0.25 1/cm at 100 GHz, from a unit-checked hand evaluation
        assert kappa_from_alpha(0.25, 100e9) == pytest.approx(
            0.0059641814490461785, rel=1e-12)

    def test_inverse_frequency(self):
        assert kappa_from_alpha(0.1, 200e9) == pytest.approx(
            0.5 * kappa_from_alpha(0.1, 100e9), rel=1e-12)

    def test_round_trip(self):
        alphas = np.array([0.0, 0.05, 0.25, 3.0])
        back = alpha_from_kappa(kappa_from_alpha(alphas, 90e9), 90e9)
        assert np.allclose(back, alphas, rtol=1e-12)

    def test_bad_frequency(self):
        with pytest.raises(ValueError):
            kappa_from_alpha(0.1, 0.0)


class TestAbsorbance:
    def test_full_transmission(self):
        assert absorbance_from_tau(1.0) == 0.0

    def test_e_inverse(self):
        assert absorbance_from_tau(math.exp(-1.0)) == pytest.approx(1.0, rel=1e-12)

    def test_ln20(self):
        assert absorbance_from_tau(0.05) == pytest.approx(math.log(20.0), rel=1e-12)

    def test_lost_ray_marker(self):
        assert absorbance_from_tau(0.0) == math.inf


class TestScanGeometry:
    def test_paper_scale_counts(self):
        geom = ScanGeometry(p=360, q=70, R=70.5)
        assert geom.n_offsets == 141
        assert geom.n_rays == 50760

    def test_angles_cover_full_circle(self):
        geom = ScanGeometry(p=8, q=2, R=10.0)
        angles = geom.angles()
        assert angles[0] == 0.0
        assert angles.max() > math.pi  # no half-turn folding
        assert np.unique(angles).size == 8

    def test_offsets_span(self):
        geom = ScanGeometry(p=4, q=5, R=20.0)
        offs = geom.offsets()
        assert offs[0] == -20.0 and offs[-1] == 20.0
        assert np.allclose(np.diff(offs), 4.0)

    def test_enumeration_order(self):
        geom = ScanGeometry(p=3, q=1, R=5.0)
        seen = [(i, j) for _nu, i, j, _phi, _s in geom.rays()]
        assert seen == [(1, -1), (1, 0), (1, 1), (2, -1), (2, 0), (2, 1),
                        (3, -1), (3, 0), (3, 1)]
        assert geom.ray_index(2, 0) == 4

    def test_validation(self):
        with pytest.raises(ValueError):
            ScanGeometry(p=0, q=1, R=1.0)


class TestGridSpec:
    def test_must_cover_disk(self):
        with pytest.raises(ValueError):
            GridSpec(R=50.0, rows=10, cols=10, h=1.0)

    def test_square_factory(self):
        grid = GridSpec.square(70.5, 141)
        assert grid.h == pytest.approx(1.0)
        assert grid.x0 == -70.5

    def test_pixel_of(self):
        grid = GridSpec(R=5.0, rows=10, cols=10, h=1.0)
        assert grid.pixel_of(0.1, 0.1) == (5, 5)
        assert grid.pixel_of(-4.9, 4.9) == (9, 0)
        assert grid.pixel_of(6.0, 0.0) is None


class TestMaterialField:
    def test_validate_rejects_negative(self):
        grid = GridSpec(R=5.0, rows=10, cols=10, h=1.0)
        fld = MaterialField(grid, -0.5 * np.ones((10, 10)), np.zeros((10, 10)))
        with pytest.raises(ValueError):
            fld.validate()

    def test_alpha_unit_seam(self):
        grid = GridSpec(R=5.0, rows=10, cols=10, h=1.0)
        fld = MaterialField(grid, alpha=0.25 * np.ones((10, 10)))
        assert np.allclose(fld.alpha_per_mm, 0.025)

    def test_sample_index_outside_disk_is_air(self):
        grid = GridSpec(R=5.0, rows=10, cols=10, h=1.0)
        fld = MaterialField(grid, 0.4 * np.ones((10, 10)), np.zeros((10, 10)))
        assert fld.sample_index(0.0, 0.0) == 1.4
        assert fld.sample_index(4.99, 0.0) == 1.4
        assert fld.sample_index(5.01, 0.0) == 1.0

    def test_complex_index(self):
        grid = GridSpec(R=5.0, rows=10, cols=10, h=1.0)
        fld = MaterialField(grid, 0.4 * np.ones((10, 10)),
                            0.25 * np.ones((10, 10)), frequency_hz=100e9)
        z = fld.complex_index()
        assert z[0, 0] == pytest.approx(1.4 + 1j * 0.0059641814490461785)

    def test_integrand_is_index_deviation(self):
        grid = GridSpec(R=5.0, rows=10, cols=10, h=1.0)
        fld = MaterialField(grid, 0.4 * np.ones((10, 10)), np.zeros((10, 10)))
        assert path_difference_integrand(fld) is fld.n_minus_1


class TestGridIO:
    def test_round_trip_bit_exact(self, tmp_path):
        grid = GridSpec(R=5.0, rows=12, cols=16, h=1.0)
        rng = np.random.default_rng(7)
        values = rng.standard_normal((12, 16))
        write_grid_channel(tmp_path / "chan", grid, values, "n", "dimensionless")
        grid2, values2, header = read_grid_channel(tmp_path / "chan")
        assert grid2 == grid
        assert np.array_equal(values, values2)
        assert header["channel"] == "n"
        assert header["units"] == "dimensionless"

    def test_size_mismatch_rejected(self, tmp_path):
        grid = GridSpec(R=5.0, rows=12, cols=16, h=1.0)
        write_grid_channel(tmp_path / "chan", grid, np.zeros((12, 16)), "n", "1")
        (tmp_path / "chan.f64").write_bytes(b"\x00" * 16)
        with pytest.raises(ValueError):
            read_grid_channel(tmp_path / "chan")
