#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"
#include "semiff/sidebands.hpp"

using namespace semiff;

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;

AngleDistribution cosine_eta(std::size_t bins, double shift = 0.0)
{
    std::vector<double> d(bins);
    for (std::size_t j = 0; j < bins; ++j) {
        const double th = (j + 0.5) * two_pi / bins;
        d[j] = (1.0 + std::cos(th - shift)) / two_pi;
    }
    return distribution_from_density(std::move(d));
}

/// Final angles of a fast-forward ensemble for a given hbar and level.
std::vector<double> ensemble_weights(double hbar, int n)
{
    PhysicalParams p;
    p.hbar = hbar;
    p.n = n;
    const Potential u(QuarticPaper{}, p);
    const auto grid = Grid1D::symmetric(8.0, 512);
    FlowOptions fo;
    fo.mesh_size = 201;
    const auto table = std::make_shared<const FlowTable>(build_flow_table(u, n, grid, fo));
    const auto start = sample_shell_uniform_angle(make_wkb_state(u, n, 0.0, grid).shell, 200);
    IntegrateOptions o;
    o.dt = 1e-3;
    const auto h = integrate_ensemble(start, ForceField::with_ff(u, table), grid, o);
    const auto end_shell = make_wkb_state(u, n, 1.0, grid).shell;
    return predict_sidebands(extract_final_angles(h.final, end_shell, 50), 6, n).weights;
}
}  // namespace

TEST(Sidebands, UniformIsDelta)
{
    const auto w = predict_sidebands(distribution_from_density(std::vector<double>(64, 1.0 / two_pi)), 6, 17);
    EXPECT_NEAR(w.weight(0), 1.0, 1e-12);
    for (int l = 1; l <= 6; ++l) {
        EXPECT_NEAR(w.weight(l), 0.0, 1e-12);
        EXPECT_NEAR(w.weight(-l), 0.0, 1e-12);
    }
    EXPECT_EQ(w.weight(7), 0.0);
    EXPECT_EQ(w.n, 17);
}

TEST(Sidebands, CosineMatchesReference)
{
    const auto w = predict_sidebands(cosine_eta(2000));
    for (int l = 0; l <= 6; ++l) {
        EXPECT_NEAR(w.weight(l), oracle::cosine_eta_weights[l], 1e-3) << l;
        EXPECT_NEAR(w.weight(-l), w.weight(l), 1e-12) << l;
    }
    EXPECT_LE(w.total(), 1.0 + 1e-12);
}

TEST(Sidebands, ShiftOnlyChangesPhase)
{
    const auto a = predict_sidebands(cosine_eta(360));
    const auto b = predict_sidebands(cosine_eta(360, 2.0 * two_pi / 360));
    for (int l = -6; l <= 6; ++l) EXPECT_NEAR(a.weight(l), b.weight(l), 1e-12);
}

TEST(Sidebands, BinRefinementStable)
{
    const auto a = predict_sidebands(cosine_eta(200));
    const auto b = predict_sidebands(cosine_eta(400));
    for (int l = -6; l <= 6; ++l) EXPECT_NEAR(a.weight(l), b.weight(l), 1e-4);
}

TEST(Sidebands, Errors)
{
    EXPECT_THROW(predict_sidebands(distribution_from_density({}), 6), ConfigError);
    EXPECT_THROW(predict_sidebands(cosine_eta(10), -1), ConfigError);
}

TEST(Compare, IdenticalIsZero)
{
    const auto w = predict_sidebands(cosine_eta(100), 6, 17);
    std::vector<double> p(41, 0.0);
    for (int l = -6; l <= 6; ++l) p[17 + l] = w.weight(l);
    const auto c = compare(w, p, 3);
    EXPECT_EQ(c.sup_diff, 0.0);
    ASSERT_EQ(c.rows.size(), 13u);
    EXPECT_EQ(c.rows.front().k, 11);
    EXPECT_EQ(c.rows.back().l, 6);
}

TEST(Compare, WindowAndTableEdges)
{
    const auto w = predict_sidebands(cosine_eta(100), 6, 2);
    std::vector<double> p(5, 0.0);
    p[2] = 1.0;
    const auto c = compare(w, p, 1);
    EXPECT_EQ(c.rows.front().k, 0);  // k < 0 dropped
    EXPECT_EQ(c.rows.size(), 9u);
    EXPECT_NEAR(c.sup_diff, 1.0 - w.weight(0), 1e-15);
    for (const auto& r : c.rows)
        if (r.k >= 5) {
            EXPECT_EQ(r.quantum, 0.0);
        }
}

TEST(Sidebands, DependOnlyOnAction)
{
    // hbar (n + 1/2) = 35 in both cases
    const auto a = ensemble_weights(2.0, 17);
    const auto b = ensemble_weights(14.0, 2);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10) << i;
}
