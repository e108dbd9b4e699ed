import numpy as np

from baxtertq import probes


class TestOffsets:

    def test_from_offsets(self, hex_pair):
        assert probes.from_offsets(1.0, 0.0, hex_pair) == 1j * hex_pair.omega1
        assert probes.from_offsets(0.0, -0.5, hex_pair) == -0.5j * hex_pair.omega2

    def test_random_offsets_reproducible(self):
        a = probes.random_offsets(10, seed=5)
        b = probes.random_offsets(10, seed=5)
        assert a.shape == (10, 2)
        assert np.array_equal(a, b)

    def test_random_offsets_range(self):
        magnitudes = np.abs(probes.random_offsets(50, seed=1))
        assert np.all(magnitudes >= 0.1)
        assert np.all(magnitudes <= 0.4)


class TestClearance:

    def test_lattice_images_are_not_clear(self, hex_pair):
        root = 0.1 + 0.05j
        image = root + 1j * hex_pair.omega1 - 1j * hex_pair.omega2
        assert not probes.is_clear(image, [root], hex_pair)
        assert probes.is_clear(root + 0.3 * hex_pair.omega2, [root], hex_pair)

    def test_shifts_are_checked(self, hex_pair):
        z = 0.3 + 0j
        assert probes.is_clear(z, [0j], hex_pair)
        assert not probes.is_clear(z, [0j], hex_pair, shifts=(0, -0.3))

    def test_place_avoids_roots(self, hex_pair):
        root = probes.from_offsets(0.2, 0.3, hex_pair)
        point = probes.place(0.2, 0.3, [root], hex_pair)
        assert point != root
        assert probes.is_clear(point, [root], hex_pair)

    def test_cell_grid_size(self, hex_pair):
        grid = probes.cell_grid([0.1, 0.2], [0.1, 0.2, 0.3], [0.0], hex_pair)
        assert len(grid) == 6
        assert len(set(grid)) == 6
