#include "dg3pd/imaging.hpp"
#include "dg3pd/solver.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

using namespace dg3pd;
using testing::random_image;
using testing::rel_diff;
using testing::to_vec;

namespace {

SolverParams small_params(std::size_t L, std::size_t S)
{
    SolverParams p;
    p.L = L;
    p.S = S;
    p.transform.scales = 2;
    return p;
}

std::vector<RealImage> random_list(std::size_t count, std::size_t n, std::uint64_t seed, double scale)
{
    std::vector<RealImage> out;
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(scale * random_image(n, n, seed + i));
    return out;
}

// Every block filled with random values of plausible magnitude.
DecompositionState random_state(const RealImage& f, std::size_t L, std::size_t S, std::uint64_t seed)
{
    const std::size_t n = f.rows();
    DecompositionState st = DecompositionState::initial(f, L, S);
    st.u = f + 5.0 * random_image(n, n, seed + 1);
    st.v = 3.0 * random_image(n, n, seed + 2);
    st.eps = 2.0 * random_image(n, n, seed + 3);
    st.r = random_list(L, n, seed + 100, 4.0);
    st.w = random_list(S, n, seed + 200, 4.0);
    st.g = random_list(S, n, seed + 300, 4.0);
    st.lambda1 = random_list(L, n, seed + 400, 0.5);
    st.lambda2 = random_list(S, n, seed + 500, 0.5);
    st.lambda3 = 0.5 * random_image(n, n, seed + 4);
    st.lambda4 = 0.5 * random_image(n, n, seed + 5);
    st.mu1 = 0.3;
    st.mu2 = 0.7;
    return st;
}

Eigen::MatrixXd dmat(std::size_t n, std::size_t l, std::size_t count)
{
    return testing::directional_matrix(n, n, testing::direction_cos(l, count), testing::direction_sin(l, count));
}

// Random perturbations of one block never lower the augmented Lagrangian.
template <class Block>
void check_stage_optimal(DecompositionState st, const SolverContext& ctx, Block block, std::uint64_t seed)
{
    const double base = augmented_lagrangian(st, ctx);
    for (int k = 0; k < 20; ++k) {
        DecompositionState pert = st;
        RealImage& x = block(pert);
        const double scale = k < 10 ? 1e-3 : 1e-1;
        x += scale * random_image(x.rows(), x.cols(), seed + k);
        CHECK(augmented_lagrangian(pert, ctx) - base >= -1e-9);
    }
}

}  // namespace

TEST_CASE("penalty derivation")
{
    SolverParams p;
    Betas b = derive_betas(p);
    CHECK(b.beta3 == doctest::Approx(0.36).epsilon(1e-14));
    CHECK(b.beta2 == doctest::Approx(0.468).epsilon(1e-14));
    CHECK(b.beta1 == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(b.beta4 == 0.04);

    p.theta = 0.5;
    b = derive_betas(p);
    CHECK(b.beta3 == doctest::Approx(b.beta4).epsilon(1e-15));

    p.beta4 = 0.025;
    p.c1 = 10;
    CHECK(derive_betas(p).beta1 == doctest::Approx(0.25).epsilon(1e-15));

    for (double bad : {0.0, 1.0, -0.2, 1.5}) {
        p.theta = bad;
        CHECK_THROWS_AS(derive_betas(p), std::invalid_argument);
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    }
}

TEST_CASE("parameter validation")
{
    SolverParams p;
    CHECK_NOTHROW(p.validate());
    p.gamma = 0;
    CHECK_NOTHROW(p.validate());
    p.gamma = -1;
    CHECK_THROWS(p.validate());
    p = {};
    p.delta = -1;
    CHECK_THROWS(p.validate());
    p = {};
    p.L = 0;
    CHECK_THROWS(p.validate());
    p = {};
    p.c_mu1 = -0.1;
    CHECK_THROWS(p.validate());
    p = {};
    p.eps_mode = EpsMode::Project;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.transform.kind = TransformKind::Wedge;
    CHECK_NOTHROW(p.validate());
    CHECK(parse_eps_mode("project") == EpsMode::Project);
    CHECK(to_string(EpsMode::Cst) == "cst");
    CHECK_THROWS(parse_eps_mode("exact"));
}

TEST_CASE("initial state")
{
    const RealImage f = random_image(8, 8, 1);
    const DecompositionState st = DecompositionState::initial(f, 3, 4);
    CHECK(st.u == f);
    CHECK(st.r.size() == 3);
    CHECK(st.lambda1.size() == 3);
    CHECK(st.w.size() == 4);
    CHECK(st.g.size() == 4);
    CHECK(st.lambda2.size() == 4);
    for (const RealImage* x : {&st.v, &st.eps, &st.lambda3, &st.lambda4})
        CHECK(norm_linf(*x) == 0.0);
    for (const auto& x : st.g)
        CHECK(norm_linf(x) == 0.0);
}

TEST_CASE("spectral kernels are bounded")
{
    const SolverContext ctx(random_image(16, 16, 2), small_params(9, 9));
    for (const auto& A : ctx.kernels.A)
        for (std::size_t i = 0; i < A.size(); ++i) {
            CHECK(A[i].real() > 0.0);
            CHECK(A[i].real() <= 1.0 / ctx.betas.beta2 + 1e-12);
        }
    for (std::size_t i = 0; i < ctx.kernels.X.size(); ++i)
        CHECK(ctx.kernels.X[i].real() <= 1.0 / ctx.betas.beta4 + 1e-12);
    CHECK(ctx.kernels.X[0].real() == doctest::Approx(1.0 / ctx.betas.beta4));
}

TEST_CASE("u update matches the dense normal equations")
{
    const std::size_t n = 8;
    for (std::size_t L : {1u, 2u, 3u, 9u}) {
        CAPTURE(L);
        const RealImage f = random_image(n, n, 10 + L, 0, 255);
        const SolverContext ctx(f, small_params(L, 3));
        DecompositionState st = random_state(f, L, 3, 1000 + L);
        const auto [b1, b2, b3, b4] = ctx.betas;

        Eigen::MatrixXd M = b4 * Eigen::MatrixXd::Identity(n * n, n * n);
        Eigen::VectorXd rhs = b4 * to_vec(f - st.v - st.eps) + to_vec(st.lambda4);
        for (std::size_t l = 0; l < L; ++l) {
            const Eigen::MatrixXd D = dmat(n, l, L);
            M += b1 * D.transpose() * D;
            rhs += D.transpose() * (b1 * to_vec(st.r[l]) + to_vec(st.lambda1[l]));
        }
        const Eigen::VectorXd u = M.ldlt().solve(rhs);

        solve_u(st, ctx);
        CHECK(rel_diff(st.u, testing::from_vec(u, n, n)) < 1e-8);
    }
}

TEST_CASE("u update fixed points")
{
    const RealImage f = random_image(8, 8, 3, 0, 255);
    const SolverContext ctx(f, small_params(9, 9));
    DecompositionState st = DecompositionState::initial(RealImage(8, 8), 9, 9);
    solve_u(st, ctx);
    // r = 0 leaves the smoothing problem min b1 sum ||D_l u||^2 + b4 ||f - u||^2.
    const auto [b1, b2, b3, b4] = ctx.betas;
    Eigen::MatrixXd M = b4 * Eigen::MatrixXd::Identity(64, 64);
    for (std::size_t l = 0; l < 9; ++l) {
        const Eigen::MatrixXd D = dmat(8, l, 9);
        M += b1 * D.transpose() * D;
    }
    CHECK(rel_diff(st.u, testing::from_vec(M.ldlt().solve(b4 * to_vec(f)), 8, 8)) < 1e-8);

    const RealImage flat(8, 8, 42.0);
    const SolverContext flat_ctx(flat, small_params(9, 9));
    DecompositionState fs = DecompositionState::initial(flat, 9, 9);
    solve_u(fs, flat_ctx);
    CHECK(norm_linf(fs.u - flat) < 1e-10);
}

TEST_CASE("g update matches a sequential dense solve")
{
    const std::size_t n = 8;
    for (std::size_t S : {1u, 2u, 3u, 9u}) {
        CAPTURE(S);
        const RealImage f = random_image(n, n, 20 + S, 0, 255);
        const SolverContext ctx(f, small_params(3, S));
        DecompositionState st = random_state(f, 3, S, 2000 + S);
        const auto [b1, b2, b3, b4] = ctx.betas;

        std::vector<Eigen::MatrixXd> D;
        std::vector<Eigen::VectorXd> g;
        for (std::size_t a = 0; a < S; ++a) {
            D.push_back(dmat(n, a, S));
            g.push_back(to_vec(st.g[a]));
        }
        const Eigen::VectorXd anchor = to_vec(st.v) + to_vec(st.lambda3) / b3;
        for (std::size_t a = 0; a < S; ++a) {
            Eigen::VectorXd others = Eigen::VectorXd::Zero(n * n);
            for (std::size_t s = 0; s < S; ++s)
                if (s != a)
                    others += D[s] * g[s];
            const Eigen::MatrixXd M = b2 * Eigen::MatrixXd::Identity(n * n, n * n) + b3 * D[a].transpose() * D[a];
            const Eigen::VectorXd rhs =
                b2 * (to_vec(st.w[a]) + to_vec(st.lambda2[a]) / b2) + b3 * D[a].transpose() * (anchor - others);
            g[a] = M.ldlt().solve(rhs);
        }

        solve_g(st, ctx);
        for (std::size_t a = 0; a < S; ++a)
            CHECK(rel_diff(st.g[a], testing::from_vec(g[a], n, n)) < 1e-8);
    }
}

TEST_CASE("g update with zero inputs stays zero")
{
    const RealImage f = random_image(8, 8, 4);
    const SolverContext ctx(f, small_params(3, 3));
    DecompositionState st = DecompositionState::initial(f, 3, 3);
    solve_g(st, ctx);
    for (const auto& g : st.g)
        CHECK(norm_linf(g) < 1e-12);
}

TEST_CASE("shrink-based updates match scalar prox oracles")
{
    const std::size_t n = 6;
    const std::size_t L = 3, S = 3;
    SolverParams p = small_params(L, S);
    p.transform.scales = 1;
    const RealImage f = random_image(n, n, 30, 0, 255);
    const SolverContext ctx(f, p);
    const auto [b1, b2, b3, b4] = ctx.betas;
    const DecompositionState st0 = random_state(f, L, S, 3000);

    DecompositionState st = st0;
    solve_r(st, ctx);
    for (std::size_t l = 0; l < L; ++l) {
        const Eigen::VectorXd du = dmat(n, l, L) * to_vec(st0.u);
        for (std::size_t i = 0; i < n * n; ++i) {
            const double t = du[i] - st0.lambda1[l][i] / b1;
            const double y = testing::grid_argmin(
                [&](double x) { return std::abs(x) + 0.5 * b1 * (x - t) * (x - t); }, t - 40, t + 40);
            CHECK(std::abs(st.r[l][i] - y) < 1e-4);
        }
    }

    st = st0;
    solve_w(st, ctx);
    for (std::size_t a = 0; a < S; ++a) {
        for (std::size_t i = 0; i < n * n; ++i) {
            const double t = st0.g[a][i] - st0.lambda2[a][i] / b2;
            const double y = testing::grid_argmin(
                [&](double x) { return st0.mu1 * std::abs(x) + 0.5 * b2 * (x - t) * (x - t); }, t - 10, t + 10);
            CHECK(std::abs(st.w[a][i] - y) < 1e-4);
        }
    }

    st = st0;
    solve_v(st, ctx);
    Eigen::VectorXd synth = Eigen::VectorXd::Zero(n * n);
    for (std::size_t a = 0; a < S; ++a)
        synth += dmat(n, a, S) * to_vec(st0.g[a]);
    for (std::size_t i = 0; i < n * n; ++i) {
        const double t3 = synth[i] - st0.lambda3[i] / b3;
        const double t4 = f[i] - st0.u[i] - st0.eps[i] + st0.lambda4[i] / b4;
        const double y = testing::grid_argmin(
            [&](double x) {
                return st0.mu2 * std::abs(x) + 0.5 * b3 * (x - t3) * (x - t3) + 0.5 * b4 * (x - t4) * (x - t4);
            },
            std::min(t3, t4) - 10, std::max(t3, t4) + 10);
        CHECK(std::abs(st.v[i] - y) < 1e-4);
    }
}

TEST_CASE("shrink-based update special cases")
{
    const RealImage f = random_image(8, 8, 31, 0, 255);
    SolverParams p = small_params(4, 4);
    p.c1 = 1e9;
    const SolverContext big(f, p);
    DecompositionState st = random_state(f, 4, 4, 3100);
    const DecompositionState st0 = st;
    solve_r(st, big);
    for (std::size_t l = 0; l < 4; ++l) {
        RealImage t = directional_derivative(st0.u, l, big.tv_bank);
        t.add_scaled(st0.lambda1[l], -1.0 / big.betas.beta1);
        CHECK(norm_linf(st.r[l] - t) <= 1.0 / big.betas.beta1 + 1e-12);
    }

    const SolverContext ctx(RealImage(8, 8, 9.0), small_params(4, 4));
    DecompositionState flat = DecompositionState::initial(RealImage(8, 8, 9.0), 4, 4);
    solve_r(flat, ctx);
    solve_w(flat, ctx);
    for (std::size_t l = 0; l < 4; ++l) {
        CHECK(norm_linf(flat.r[l]) == 0.0);
        CHECK(norm_linf(flat.w[l]) == 0.0);
    }

    DecompositionState z = random_state(f, 4, 4, 3200);
    z.mu1 = 0;
    z.mu2 = 0;
    DecompositionState zw = z;
    solve_w(zw, ctx);
    for (std::size_t a = 0; a < 4; ++a)
        CHECK(zw.w[a] == w_target(z, ctx, a));
    solve_v(z, ctx);
    CHECK(z.v == v_target(z, ctx));

    // f = u + eps with g and multipliers zero leaves nothing for v.
    const SolverContext fctx(f, small_params(4, 4));
    DecompositionState e = DecompositionState::initial(f, 4, 4);
    e.eps = random_image(8, 8, 3300);
    e.u = f - e.eps;
    e.mu2 = 0.5;
    solve_v(e, fctx);
    CHECK(norm_linf(e.v) < 1e-12);
}

TEST_CASE("each block update is optimal for the augmented Lagrangian")
{
    const std::size_t n = 8, L = 3, S = 3;
    const RealImage f = random_image(n, n, 40, 0, 255);
    const SolverContext ctx(f, small_params(L, S));
    DecompositionState st = random_state(f, L, S, 4000);

    solve_r(st, ctx);
    for (std::size_t l = 0; l < L; ++l)
        check_stage_optimal(st, ctx, [l](DecompositionState& s) -> RealImage& { return s.r[l]; }, 10 + l);
    solve_w(st, ctx);
    for (std::size_t a = 0; a < S; ++a)
        check_stage_optimal(st, ctx, [a](DecompositionState& s) -> RealImage& { return s.w[a]; }, 20 + a);
    solve_g(st, ctx);
    // Gauss-Seidel: the last direction is optimal given all the others.
    check_stage_optimal(st, ctx, [](DecompositionState& s) -> RealImage& { return s.g.back(); }, 30);
    solve_v(st, ctx);
    check_stage_optimal(st, ctx, [](DecompositionState& s) -> RealImage& { return s.v; }, 40);
    solve_u(st, ctx);
    check_stage_optimal(st, ctx, [](DecompositionState& s) -> RealImage& { return s.u; }, 50);
}

TEST_CASE("residual update")
{
    const RealImage f = random_image(32, 32, 50, 0, 255);
    SolverParams p;
    p.transform.scales = 3;
    p.delta = 0;
    DecompositionState st = random_state(f, 9, 9, 5000);
    solve_eps(st, SolverContext(f, p));
    CHECK(norm_linf(st.eps) == 0.0);

    p.delta = 4;
    const SolverContext ctx(f, p);
    solve_eps(st, ctx);
    RealImage q = f - st.u - st.v;
    q.add_scaled(st.lambda4, 1.0 / ctx.betas.beta4);
    CHECK(norm_linf(st.eps + ctx.transform.cst(q, 4) - q) < 1e-9);

    p.delta = 1e12;
    solve_eps(st, SolverContext(f, p));
    CHECK(rel_diff(st.eps, q) < 1e-12);

    p.delta = 4;
    p.eps_mode = EpsMode::Project;
    p.transform.kind = TransformKind::Wedge;
    const SolverContext pctx(f, p);
    solve_eps(st, pctx);
    CHECK(pctx.transform.sup_coeff(st.eps) <= 4 + 1e-8);
}

TEST_CASE("multiplier updates")
{
    const std::size_t n = 4;
    SolverParams p = small_params(2, 2);
    p.transform.scales = 1;
    const RealImage f = random_image(n, n, 60, 0, 255);
    const SolverContext ctx(f, p);
    DecompositionState st = DecompositionState::initial(f, 2, 2);
    st.u = random_image(n, n, 61);
    st.v = random_image(n, n, 62);
    st.eps = random_image(n, n, 63);
    update_multipliers(st, ctx);
    for (std::size_t i = 0; i < n * n; ++i)
        CHECK(st.lambda4[i] == doctest::Approx(0.04 * (f[i] - st.u[i] - st.v[i] - st.eps[i])).epsilon(1e-14));

    p.gamma = 0;
    const SolverContext qpm(f, p);
    DecompositionState frozen = random_state(f, 2, 2, 6000);
    const DecompositionState before = frozen;
    update_multipliers(frozen, qpm);
    CHECK(frozen.lambda1 == before.lambda1);
    CHECK(frozen.lambda2 == before.lambda2);
    CHECK(frozen.lambda3 == before.lambda3);
    CHECK(frozen.lambda4 == before.lambda4);

    // All constraints hold: r = D u, w = g, v = sum D g, f = u + v + eps.
    DecompositionState sat = random_state(f, 2, 2, 6100);
    for (std::size_t l = 0; l < 2; ++l)
        sat.r[l] = directional_derivative(sat.u, l, ctx.tv_bank);
    sat.w = sat.g;
    sat.v = g_synthesis(sat.g, ctx.g_bank);
    sat.eps = f - sat.u - sat.v;
    const DecompositionState sat0 = sat;
    update_multipliers(sat, ctx);
    for (std::size_t l = 0; l < 2; ++l) {
        CHECK(norm_linf(sat.lambda1[l] - sat0.lambda1[l]) < 1e-12);
        CHECK(norm_linf(sat.lambda2[l] - sat0.lambda2[l]) == 0.0);
    }
    CHECK(norm_linf(sat.lambda3 - sat0.lambda3) < 1e-12);
    CHECK(norm_linf(sat.lambda4 - sat0.lambda4) < 1e-12);
}

TEST_CASE("adaptive sparsity weights")
{
    const RealImage f = random_image(8, 8, 70, 0, 255);
    const SolverContext ctx(f, small_params(3, 3));
    DecompositionState st = random_state(f, 3, 3, 7000);
    double peak = 0;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < 64; ++i)
            peak = std::max(peak, std::abs(st.g[a][i] - st.lambda2[a][i] / ctx.betas.beta2));
    CHECK(compute_mu1(st, ctx) == doctest::Approx(0.03 * ctx.betas.beta2 * peak).epsilon(1e-14));

    DecompositionState twice = st;
    for (std::size_t a = 0; a < 3; ++a) {
        twice.g[a] *= 2.0;
        twice.lambda2[a] *= 2.0;
    }
    CHECK(compute_mu1(twice, ctx) == doctest::Approx(2 * compute_mu1(st, ctx)).epsilon(1e-14));
    CHECK(compute_mu2(st, ctx) ==
          doctest::Approx(0.03 * (ctx.betas.beta3 + ctx.betas.beta4) * norm_linf(v_target(st, ctx))).epsilon(1e-14));

    SolverParams p = small_params(3, 3);
    p.c_mu1 = p.c_mu2 = 0;
    const SolverContext zero(f, p);
    CHECK(compute_mu1(st, zero) == 0.0);
    CHECK(compute_mu2(st, zero) == 0.0);
}

TEST_CASE("relative error")
{
    const RealImage u = random_image(8, 8, 80);
    CHECK(relative_error(u, u) == 0.0);
    CHECK(relative_error(1.1 * u, u) == doctest::Approx(0.1).epsilon(1e-12));
    const double big = relative_error(u, RealImage(8, 8));
    CHECK(!std::isnan(big));
    CHECK(big > 1e100);
}

TEST_CASE("zero image is a fixed point")
{
    SolverParams p;
    p.iterations = 5;
    p.transform.scales = 3;
    run(RealImage(16, 16), p, [](const DecompositionState& st, const SolverContext&) {
        CHECK(norm_linf(st.u) == 0.0);
        CHECK(norm_linf(st.v) == 0.0);
        CHECK(norm_linf(st.eps) == 0.0);
    });
}

TEST_CASE("run records one trace row per iteration")
{
    const Phantom ph = make_phantom(default_phantom_spec(32, 5.0, 3));
    SolverParams p;
    p.iterations = 7;
    const RunResult r = run(ph.f, p);
    REQUIRE(r.trace.records.size() == 7);
    for (std::size_t t = 0; t < 7; ++t)
        CHECK(r.trace.records[t].iter == t + 1);
    CHECK(r.state.iteration == 7);
    const TraceRecord& last = r.trace.records.back();
    CHECK(last.l2_recon == doctest::Approx(norm_l2(reconstruction_error(ph.f, r.state))));
    CHECK(last.mu1 == r.state.mu1);

    const std::string csv = r.trace.to_csv();
    CHECK(csv.rfind("iter,rel_err_u,l2_recon,linf_recon,dtv_u,l1_v,sup_eps,mu1,mu2\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
    CHECK(run(ph.f, p).trace.to_csv() == csv);
}

TEST_CASE("early stop")
{
    const Phantom ph = make_phantom(default_phantom_spec(32, 0.0, 1));
    SolverParams p;
    p.iterations = 200;
    p.early_stop_tol = 1e-2;
    const RunResult r = run(ph.f, p);
    CHECK(r.trace.records.size() < 200);
    CHECK(r.trace.records.back().rel_err_u < 1e-2);
}

TEST_CASE("non-finite input aborts naming the stage")
{
    RealImage f = random_image(16, 16, 90);
    SolverParams p;
    p.transform.scales = 3;
    f(3, 3) = std::nan("");
    CHECK_THROWS_AS(run(f, p), std::invalid_argument);

    // Finite input whose differences overflow.
    f(3, 3) = 1e308;
    f(3, 4) = -1e308;
    try {
        run(f, p);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("r update") != std::string::npos);
    }
}

TEST_CASE("phantom runs: residual trends and penalty comparison")
{
    const Phantom ph = make_phantom(default_phantom_spec(64, 0.0, 1));
    SolverParams p;
    p.delta = 0;
    p.iterations = 60;
    std::vector<double> l2, linf;
    const RunResult alm = run(ph.f, p, [&](const DecompositionState& st, const SolverContext&) {
        CHECK(norm_linf(st.eps) == 0.0);
        const RealImage gap = reconstruction_error(ph.f, st);
        l2.push_back(norm_l2(gap));
        linf.push_back(norm_linf(gap));
    });
    CHECK(linf[59] < linf[19]);
    CHECK(l2[19] < l2[0]);

    p.gamma = 0;
    const RunResult qpm = run(ph.f, p);
    CHECK(norm_l2(reconstruction_error(ph.f, qpm.state)) > norm_l2(reconstruction_error(ph.f, alm.state)));
}
