import numpy as np
import pytest

from igabem.assembly import (
    CollocationSystem, QuadratureConfig, QuadratureWarning, assemble, boundary_operator, c_diagnostic, jump_matrix,
    patch_contexts, solve,
)
from igabem.benchmarks import pulsating_sphere_data, pulsating_sphere_problem
from igabem.geometry import sphere, torus
from igabem.space import ConformityError, build_space, collocation_points

pytestmark = pytest.mark.filterwarnings("ignore::igabem.assembly.QuadratureWarning")

SPHERE = sphere()


# spaces -------------------------------------------------------------------

@pytest.mark.parametrize("d,n", [(2, 5), (4, 3)])
def test_sphere_dof_count_218(d, n):
    assert build_space(SPHERE, d, n).n_dof == 218


def test_sphere_degree_four_dof_sequence():
    counts = [build_space(SPHERE, 4, n).n_dof for n in range(1, 8)]
    assert counts == [98, 152, 218, 296, 386, 488, 602]


def test_discontinuous_count_is_sum_of_patch_dimensions():
    sp = build_space(SPHERE, 2, 3, "discontinuous")
    assert sp.n_dof == 6 * 25
    assert build_space(SPHERE, 2, 3).n_dof < sp.n_dof


def test_dof_classes():
    sp = build_space(SPHERE, 2, 3)
    cls = np.array(sp.classes)
    assert (cls == "vertex").sum() == 8          # cube corners
    assert (cls == "edge").sum() == 12 * 3       # 12 edges, 3 interior edge functions each
    assert (cls == "interior").sum() == 6 * 9


def test_c0_requires_positive_degree():
    with pytest.raises(ConformityError):
        build_space(SPHERE, 0, 2, "C0")


def test_c0_requires_matching_knots():
    with pytest.raises(ConformityError):
        build_space(SPHERE, 2, [(np.r_[0, 0, 0, 0.5, 1, 1, 1], np.r_[0, 0, 0, 0.5, 1, 1, 1])] * 5
                    + [(np.r_[0, 0, 0, 0.3, 1, 1, 1], np.r_[0, 0, 0, 0.5, 1, 1, 1])])


@pytest.mark.parametrize("surface", [SPHERE, torus()], ids=["sphere", "torus"])
def test_c0_edge_functions_agree_on_shared_curve(surface):
    sp = build_space(surface, 2, 3)
    t = np.linspace(0, 1, 11)
    for itf in surface.interfaces:
        pa = _edge_params(itf.edge_a, t)
        pb = _edge_params(itf.edge_b, t[::-1] if itf.reversed else t)
        xa = surface[itf.patch_a].eval_point(pa[:, 0], pa[:, 1])
        xb = surface[itf.patch_b].eval_point(pb[:, 0], pb[:, 1])
        np.testing.assert_allclose(xa, xb, atol=1e-12)
        rng = np.random.default_rng(itf.patch_a * 7 + itf.edge_a)
        c = rng.standard_normal(sp.n_dof)
        va = [_eval(sp, c, itf.patch_a, s) for s in pa]
        vb = [_eval(sp, c, itf.patch_b, s) for s in pb]
        np.testing.assert_allclose(va, vb, atol=1e-10 * np.abs(c).max())


def _edge_params(edge, t):
    z, o = np.zeros_like(t), np.ones_like(t)
    return np.stack([(t, z), (o, t), (t, o), (z, t)][edge], axis=1)


def _eval(sp, c, k, s):
    dofs, vals = sp.basis_row(k, s)
    return vals @ c[dofs]


# collocation points ---------------------------------------------------------

def test_patch_test_midpoints():
    sp = build_space(SPHERE, 0, 4, "discontinuous")
    pts = collocation_points(sp)
    assert len(pts) == 6 * 16
    for k in range(6):
        s = pts.s[pts.patch == k]
        assert len(s) == 16
        np.testing.assert_allclose(np.unique(s[:, 0]), [0.125, 0.375, 0.625, 0.875])
        np.testing.assert_allclose(pts.x[pts.patch == k], SPHERE[k].eval_point(s[:, 0], s[:, 1]))


@pytest.mark.parametrize("d,n", [(2, 3), (3, 2), (4, 1)])
def test_c0_points_unique_and_one_per_dof(d, n):
    sp = build_space(SPHERE, d, n)
    pts = collocation_points(sp)
    assert len(pts) == sp.n_dof
    assert np.unique(np.round(pts.x, 9), axis=0).shape[0] == sp.n_dof
    np.testing.assert_allclose(np.linalg.norm(pts.x, axis=1), 1.0, atol=1e-12)


def test_improved_greville_points_interior():
    sp = build_space(SPHERE, 2, 3, "discontinuous")
    pts = collocation_points(sp, omega=0.5)
    assert np.all((pts.s > 0) & (pts.s < 1))
    assert len(pts) == sp.n_dof


# assembly -----------------------------------------------------------------

def test_entries_finite_and_block_shape():
    pb = pulsating_sphere_problem(1.0)
    sp = build_space(pb.surface, 2, 2)
    system = assemble(pb, sp, QuadratureConfig())
    assert system.A.shape == (sp.n_dof, sp.n_dof)
    assert np.all(np.isfinite(system.A)) and np.all(np.isfinite(system.beta))


@pytest.mark.parametrize("domain,expected", [("interior", 0.0), ("exterior", 1.0)])
def test_constant_function_identity(domain, expected):
    # with n out of the domain, K_0 1 = -1/2 inside the body and +1/2 outside of it
    sp = build_space(SPHERE, 2, 2)
    pts = collocation_points(sp)
    K = boundary_operator(sp, pts, "double", 0.0, QuadratureConfig(), patch_contexts(SPHERE, domain))
    np.testing.assert_allclose(K.sum(1).real + 0.5, expected, atol=5e-3)


def test_jump_term_shifts_constant_residual_by_one_half():
    pb = pulsating_sphere_problem(1.0)
    sp = build_space(pb.surface, 2, 2)
    qc = QuadratureConfig()
    with_j = assemble(pb, sp, qc)
    without = assemble(pb, sp, qc, jump=False)
    one = np.ones(sp.n_dof)
    np.testing.assert_allclose(with_j.A @ one - without.A @ one, 0.5, atol=1e-14)
    np.testing.assert_allclose(jump_matrix(sp, with_j.points).sum(1), 1.0, atol=1e-14)


def test_assembly_is_deterministic():
    pb = pulsating_sphere_problem(1.0)
    sp = build_space(pb.surface, 2, 2)
    a = assemble(pb, sp, QuadratureConfig())
    b = assemble(pb, sp, QuadratureConfig())
    assert np.array_equal(a.A, b.A) and np.array_equal(a.beta, b.beta)


def test_exact_coefficients_residual_decreases_with_nodes():
    # pulsating-sphere patch test: phi is constant, so the exact coefficient vector is known
    pb = pulsating_sphere_problem(1.0)
    sp = build_space(pb.surface, 0, 4, "discontinuous")
    pts = collocation_points(sp)
    phi = np.full(sp.n_dof, pulsating_sphere_data(1.0)[1])
    res = []
    alphas = [1, 2, 3]
    for a in alphas:
        nq = 12 * a + 1
        qc = QuadratureConfig(p_reg=2, p_sing=2, m=2, c=0.25, nu_reg=nq, nu_sing=nq, nu_rem=nq, nu_rhs=nq)
        s = assemble(pb, sp, qc, pts)
        res.append(np.abs(s.A @ phi - s.beta).max() / np.abs(s.beta).max())
    order = -np.polyfit(np.log(alphas), np.log(res), 1)[0]
    assert order >= 3 - 0.4


def test_matrix_dump(tmp_path):
    A = np.array([[1 + 2j, 0], [0, 3]])
    sys = CollocationSystem(A, np.array([1j, 2]), None, None, None)
    sys.dump(tmp_path / "m.txt")
    lines = (tmp_path / "m.txt").read_text().splitlines()
    assert lines[1].split()[:3] == ["A", "0", "0"]
    assert float(lines[1].split()[4]) == 2.0
    assert len(lines) == 1 + 4 + 2


# solve --------------------------------------------------------------------

def _system(A, b):
    return CollocationSystem(np.asarray(A, dtype=complex), np.asarray(b, dtype=complex), None, None, None)


def test_solve_identity():
    s = _system(np.eye(4), np.eye(4)[0])
    np.testing.assert_array_equal(solve(s), np.eye(4)[0])


def test_solve_two_by_two():
    # (1+i) a + 2 b = 1,  a - i b = 0  =>  a = i b,  b = 1 / (i (1+i) + 2) = 1 / (1 + i)
    s = _system([[1 + 1j, 2], [1, -1j]], [1, 0])
    b = 1 / (1 + 1j)
    np.testing.assert_allclose(solve(s), [1j * b, b], atol=1e-15)


def test_solve_warns_when_ill_conditioned():
    s = _system([[1, 1], [1, 1 + 1e-14]], [1, 1])
    with pytest.warns(QuadratureWarning):
        solve(s)


def test_pulsating_sphere_solution_and_residual():
    pb = pulsating_sphere_problem(1.0)
    sp = build_space(pb.surface, 2, 3)
    system = assemble(pb, sp, QuadratureConfig())
    alpha = solve(system)
    assert system.residual() <= 1e-10
    np.testing.assert_allclose(alpha, np.exp(1j) / (4 * np.pi), atol=1e-4)


# jump coefficient diagnostic ------------------------------------------------

def test_c_diagnostic_on_sphere():
    sp = build_space(SPHERE, 2, 4)
    c = c_diagnostic(sp, collocation_points(sp), QuadratureConfig())
    np.testing.assert_allclose(c, 0.5, atol=1e-4)
