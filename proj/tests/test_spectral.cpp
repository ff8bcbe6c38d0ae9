#include <gtest/gtest.h>

#include "semiff/spectral.hpp"

using namespace semiff;

namespace {
PhysicalParams params(double hbar)
{
    PhysicalParams p;
    p.hbar = hbar;
    return p;
}
}  // namespace

TEST(Spectral, HarmonicLadder)
{
    const auto g = Grid1D::symmetric(10.0, 512);
    const auto eig = solve_eigenproblem(evaluate_potential(Harmonic{1.0}, params(1.0), g, 0.0), params(1.0), 20);
    for (std::size_t k = 0; k < 20; ++k) EXPECT_NEAR(eig.energies[k], k + 0.5, 1e-8) << "k=" << k;
}

TEST(Spectral, NodeCountAndNormalization)
{
    const auto g = Grid1D::symmetric(8.0, 1024);
    const Potential u(QuarticPaper{}, params(2.0));
    const auto eig = solve_eigenproblem(evaluate_potential(u, g, 0.0), u.params(), 30);
    for (std::size_t k = 0; k < 30; ++k) {
        EXPECT_EQ(count_nodes(eig.vectors[k].values), static_cast<int>(k));
        double s = 0.0;
        for (double x : eig.vectors[k].values) s += x * x;
        EXPECT_NEAR(s * g.spacing(), 1.0, 1e-12);
        EXPECT_TRUE(std::is_sorted(eig.energies.begin(), eig.energies.end()));
    }
}

TEST(Spectral, PresetLevelAnchor)
{
    const auto g = Grid1D::symmetric(8.0, 1024);
    const Potential u(QuarticPaper{}, params(2.0));
    const auto eig = solve_eigenproblem(evaluate_potential(u, g, 0.0), u.params(), 41);
    EXPECT_NEAR(eig.energies[17], 53.86, 0.05);
    // Converged: doubling N moves E17 by less than 1e-9.
    const auto fine = solve_eigenproblem(evaluate_potential(u, g.refined(), 0.0), u.params(), 20);
    EXPECT_NEAR(eig.energies[17], fine.energies[17], 1e-9);
}

TEST(Spectral, SignConventionFirstLobePositive)
{
    const auto g = Grid1D::symmetric(8.0, 256);
    const auto eig = solve_eigenproblem(evaluate_potential(Harmonic{1.0}, params(1.0), g, 0.0), params(1.0), 5);
    for (const auto& v : eig.vectors) {
        double peak = 0.0;
        for (double x : v.values) peak = std::max(peak, std::abs(x));
        for (double x : v.values)
            if (std::abs(x) > 1e-3 * peak) {
                EXPECT_GT(x, 0.0);
                break;
            }
    }
}

TEST(Spectral, TooManyLevelsIsConfigError)
{
    const auto g = Grid1D::symmetric(8.0, 64);
    EXPECT_THROW(solve_eigenproblem(evaluate_potential(Harmonic{1.0}, params(1.0), g, 0.0), params(1.0), 17),
                 ConfigError);
}

TEST(Spectral, SmallBoxIsReported)
{
    const auto g = Grid1D::symmetric(3.0, 256);
    EXPECT_THROW(solve_eigenproblem(evaluate_potential(Harmonic{1.0}, params(1.0), g, 0.0), params(1.0), 10),
                 NumericalError);
}

TEST(Spectral, PopulationsOfEigenstate)
{
    const auto g = Grid1D::symmetric(10.0, 256);
    const auto eig = solve_eigenproblem(evaluate_potential(Harmonic{1.0}, params(1.0), g, 0.0), params(1.0), 8);
    ComplexField psi(g);
    for (std::size_t i = 0; i < g.size(); ++i) psi[i] = std::polar(eig.vectors[3][i], 0.7);
    const auto p = populations(psi, eig);
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], k == 3 ? 1.0 : 0.0, 1e-12);
    EXPECT_THROW(populations(ComplexField(Grid1D::symmetric(10.0, 128)), eig), Error);
}

TEST(Spectral, NodePositionsInterpolate)
{
    const Grid1D g(-1.0, 1.0, 21);
    ScalarField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = g[i] - 0.033;
    const auto nodes = node_positions(f);
    ASSERT_EQ(nodes.size(), 1u);
    EXPECT_NEAR(nodes[0], 0.033, 1e-12);
}
