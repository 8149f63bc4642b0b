import numpy as np
import pytest

from src.core.errors import DomainError, MatrixMarketError, PreconditionViolation
from src.core.grid import GridSpec, linear_index
from src.features.operator.assembly import (
    BoundaryMode, SparseOperator, assemble_G, build_source, gershgorin_alpha, laplacian3d, rescale,
)
from src.features.operator.matrix_market import (
    export_matrix_market, export_vector_csv, import_matrix_market, import_vector_csv, lower_triangle_count,
)
from src.features.permeability.coefficients import CoefficientField, constant_field, interface_value
from src.features.permeability.fractures import pitchfork3d, rasterize


def _dense_reference(field: CoefficientField, rule="harmonic") -> np.ndarray:
    """Six-flux balance per cell, built entry by entry."""
    grid = field.grid
    n, N = grid.n, grid.N
    k = field.as_cube()
    G = np.zeros((N, N))
    for i in range(n):
        for j in range(n):
            for kk in range(n):
                a = linear_index(i, j, kk, n)
                for axis in range(3):
                    for sign in (-1, 1):
                        other = [i, j, kk]
                        other[axis] += sign
                        if 0 <= other[axis] < n:
                            face = interface_value(k[i, j, kk], k[tuple(other)], rule)
                            G[a, linear_index(*other, n)] -= face / grid.dx ** 2
                        else:
                            face = k[i, j, kk]
                        G[a, a] += face / grid.dx ** 2
    return G


def test_constant_unit_spacing_is_laplacian():
    grid = GridSpec(ell=2, L=4.0)
    G = assemble_G(constant_field(grid, 1.0))
    assert np.all(G.diagonal() == 6.0)
    dense = G.to_dense()
    interior = linear_index(1, 1, 1, 4)
    assert sorted(dense[interior][dense[interior] != 0]) == [-1.0] * 6 + [6.0]
    np.testing.assert_array_equal(dense, laplacian3d(grid).to_dense())


def test_heterogeneous_assembly_matches_flux_balance(grid1):
    k = np.ones(8)
    k[3] = 2.0
    field = CoefficientField(grid1, k)
    np.testing.assert_allclose(assemble_G(field).to_dense(), _dense_reference(field), rtol=0, atol=1e-12)


def test_pitchfork_assembly_matches_flux_balance(grid2):
    field = rasterize(pitchfork3d(grid2, 2), grid2)
    for rule in ("harmonic", "geometric"):
        G = assemble_G(field, rule=rule)
        assert G.is_symmetric()
        np.testing.assert_allclose(G.to_dense(), _dense_reference(field, rule), rtol=1e-14, atol=1e-12)


def test_matvec_agrees_with_dense(grid2, rng):
    field = rasterize(pitchfork3d(grid2, 2), grid2)
    G = assemble_G(field)
    x = rng.standard_normal(G.N)
    np.testing.assert_allclose(G @ x, G.to_dense() @ x, atol=1e-12)
    X = rng.standard_normal((G.N, 3))
    np.testing.assert_allclose(G.matvec(X), G.to_dense() @ X, atol=1e-12)


def test_laplacian_corner_row(grid1):
    dense = laplacian3d(grid1).to_dense()
    assert dense[0, 0] == 6.0
    assert np.count_nonzero(dense[0]) == 4
    assert dense[0].sum() == 3.0


def test_identity_rows_keep_symmetry(grid1):
    G = assemble_G(constant_field(grid1), boundary=BoundaryMode.identity_rows([0, 7]))
    dense = G.to_dense()
    np.testing.assert_array_equal(dense, dense.T)
    assert dense[0, 0] == 1.0 and np.count_nonzero(dense[0]) == 1
    assert dense[7, 7] == 1.0 and np.count_nonzero(dense[:, 7]) == 1
    with pytest.raises(DomainError):
        assemble_G(constant_field(grid1), boundary=BoundaryMode.identity_rows([8]))


def test_gershgorin_alpha():
    assert gershgorin_alpha(constant_field(GridSpec(ell=1))) == 48.0
    for ell in (1, 2, 3):
        grid = GridSpec(ell=ell, L=float(1 << ell))
        assert gershgorin_alpha(constant_field(grid)) == 12.0


def test_rescaled_norm_is_bounded(grid2):
    field = rasterize(pitchfork3d(grid2, 2), grid2)
    G = assemble_G(field)
    alpha = gershgorin_alpha(field)
    assert np.max(np.abs(np.linalg.eigvalsh(G.to_dense()))) <= alpha
    scaled = rescale(G, alpha)
    assert scaled.alpha == alpha
    assert scaled.a_max == pytest.approx(field.k_max / grid2.L ** 2 * 12)
    np.testing.assert_allclose(scaled.op.to_dense(), G.to_dense() / alpha)


def test_rescale_identity_and_violations(grid1):
    G = laplacian3d(grid1)
    np.testing.assert_array_equal(rescale(G, 1.0, check_norm=False).op.to_dense(), G.to_dense())
    with pytest.raises(DomainError):
        rescale(G, 0.0)
    with pytest.raises(PreconditionViolation):
        rescale(G, 8.0)


def test_build_source():
    grid = GridSpec(ell=2)
    b = build_source(grid, sites=[(5, 1.0)])
    assert np.flatnonzero(b).tolist() == [5] and b[5] == 1.0
    first = build_source(grid, count=20, seed=7)
    second = build_source(grid, count=20, seed=7)
    np.testing.assert_array_equal(first, second)
    assert np.count_nonzero(first) == 20
    assert first.sum() == 0.0
    with pytest.raises(DomainError):
        build_source(grid, sites=[(1, 1.0), (1, -1.0)])
    assert np.count_nonzero(build_source(GridSpec(ell=1), count=20, seed=0)) == 8


def test_matrix_market_round_trip(tmp_path, grid2):
    G = assemble_G(rasterize(pitchfork3d(grid2, 2), grid2))
    path = export_matrix_market(G, str(tmp_path / "G"), comment="pitchfork")
    assert path.endswith(".mtx")
    loaded = import_matrix_market(path)
    np.testing.assert_array_equal(loaded.bands, G.bands)
    assert lower_triangle_count(G) == (G.nnz + G.N) // 2


def test_matrix_market_reports_bad_line(tmp_path, grid1):
    path = export_matrix_market(laplacian3d(grid1), str(tmp_path / "L.mtx"))
    lines = open(path).read().splitlines()
    data_start = next(i for i, line in enumerate(lines) if not line.startswith("%")) + 1
    lines[data_start] = "1 2 oops"
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    with pytest.raises(MatrixMarketError) as excinfo:
        import_matrix_market(path)
    assert excinfo.value.line == data_start + 1


def test_from_matrix_rejects_wrapped_entries(grid1):
    dense = laplacian3d(grid1).to_dense()
    dense[1, 2] = dense[2, 1] = -1.0
    with pytest.raises(DomainError):
        SparseOperator.from_matrix(dense, grid1)


def test_vector_csv_round_trip(tmp_path, rng):
    x = rng.standard_normal(8)
    path = export_vector_csv(x, str(tmp_path / "x.csv"))
    np.testing.assert_array_equal(import_vector_csv(path), x)
