#include "dg3pd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dg3pd {

namespace {

void require_finite(const RealImage& x, const char* stage)
{
    if (!x.all_finite())
        throw std::runtime_error(std::string("non-finite values produced by the ") + stage + " update");
}

void require_finite(const std::vector<RealImage>& xs, const char* stage)
{
    for (const auto& x : xs)
        require_finite(x, stage);
}

// X(z) * Y(z) for a real kernel stored as complex.
RealImage apply_kernel(const ComplexSpectrum& kernel, ComplexSpectrum rhs)
{
    rhs *= kernel;
    return idft2_real(rhs);
}

}  // namespace

std::string to_string(EpsMode mode)
{
    return mode == EpsMode::Cst ? "cst" : "project";
}

EpsMode parse_eps_mode(const std::string& name)
{
    if (name == "cst")
        return EpsMode::Cst;
    if (name == "project")
        return EpsMode::Project;
    throw std::invalid_argument("unknown eps mode '" + name + "' (expected cst|project)");
}

void SolverParams::validate() const
{
    if (L == 0 || S == 0)
        throw std::invalid_argument("L and S must be positive");
    if (!(beta4 > 0.0))
        throw std::invalid_argument("beta4 must be positive");
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("theta must lie in (0, 1)");
    if (!(c1 > 0.0) || !(c2 > 0.0))
        throw std::invalid_argument("c1 and c2 must be positive");
    if (!(c_mu1 >= 0.0) || !(c_mu2 >= 0.0))
        throw std::invalid_argument("c_mu1 and c_mu2 must be nonnegative");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("gamma must be nonnegative");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("delta must be nonnegative");
    if (eps_mode == EpsMode::Project && transform.kind != TransformKind::Wedge)
        throw std::invalid_argument("project mode needs a Parseval frame; use the wedge transform");
}

Betas derive_betas(const SolverParams& p)
{
    if (!(p.theta > 0.0 && p.theta < 1.0))
        throw std::invalid_argument("theta must lie in (0, 1)");
    if (!(p.beta4 > 0.0) || !(p.c1 > 0.0) || !(p.c2 > 0.0))
        throw std::invalid_argument("beta4, c1 and c2 must be positive");
    Betas b{};
    b.beta4 = p.beta4;
    b.beta3 = p.theta / (1.0 - p.theta) * p.beta4;
    b.beta2 = p.c2 * b.beta3;
    b.beta1 = p.c1 * p.beta4;
    return b;
}

DecompositionState DecompositionState::initial(const RealImage& f, std::size_t L, std::size_t S)
{
    const RealImage zero(f.rows(), f.cols());
    DecompositionState s;
    s.u = f;
    s.v = zero;
    s.eps = zero;
    s.r.assign(L, zero);
    s.w.assign(S, zero);
    s.g.assign(S, zero);
    s.lambda1.assign(L, zero);
    s.lambda2.assign(S, zero);
    s.lambda3 = zero;
    s.lambda4 = zero;
    return s;
}

SpectralKernels SpectralKernels::build(std::size_t rows, std::size_t cols, const DirectionBank& tv_bank,
                                       const DirectionBank& g_bank, const Betas& betas)
{
    SpectralKernels k;
    for (std::size_t l = 0; l < tv_bank.count(); ++l)
        k.tv_symbols.push_back(tv_bank.symbol(l, rows, cols));
    for (std::size_t s = 0; s < g_bank.count(); ++s)
        k.g_symbols.push_back(g_bank.symbol(s, rows, cols));

    for (const auto& sym : k.g_symbols) {
        ComplexSpectrum a(rows, cols);
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] = 1.0 / (betas.beta2 + betas.beta3 * std::norm(sym[i]));
        k.A.push_back(std::move(a));
    }

    k.X = ComplexSpectrum(rows, cols);
    for (std::size_t i = 0; i < k.X.size(); ++i) {
        double energy = 0.0;
        for (const auto& sym : k.tv_symbols)
            energy += std::norm(sym[i]);
        k.X[i] = 1.0 / (betas.beta4 + betas.beta1 * energy);
    }
    return k;
}

SolverContext::SolverContext(RealImage f_, SolverParams params_)
    : f(std::move(f_)),
      params(std::move(params_)),
      betas((params.validate(), derive_betas(params))),
      tv_bank(params.L),
      g_bank(params.S),
      kernels(SpectralKernels::build(f.rows(), f.cols(), tv_bank, g_bank, betas)),
      transform(params.transform, f.rows(), f.cols())
{
    if (!f.all_finite())
        throw std::invalid_argument("input image contains non-finite samples");
}

void solve_r(DecompositionState& state, const SolverContext& ctx)
{
    const double b1 = ctx.betas.beta1;
    for (std::size_t b = 0; b < ctx.tv_bank.count(); ++b) {
        RealImage t = directional_derivative(state.u, b, ctx.tv_bank);
        t.add_scaled(state.lambda1[b], -1.0 / b1);
        state.r[b] = shrink(t, 1.0 / b1);
    }
}

RealImage w_target(const DecompositionState& state, const SolverContext& ctx, std::size_t a)
{
    RealImage t = state.g.at(a);
    t.add_scaled(state.lambda2.at(a), -1.0 / ctx.betas.beta2);
    return t;
}

void solve_w(DecompositionState& state, const SolverContext& ctx)
{
    const double tau = state.mu1 / ctx.betas.beta2;
    for (std::size_t a = 0; a < ctx.g_bank.count(); ++a)
        state.w[a] = shrink(w_target(state, ctx, a), tau);
}

void solve_g(DecompositionState& state, const SolverContext& ctx)
{
    const double b2 = ctx.betas.beta2, b3 = ctx.betas.beta3;
    const std::size_t S = ctx.g_bank.count();
    const auto& sym = ctx.kernels.g_symbols;

    RealImage anchor = state.v;
    anchor.add_scaled(state.lambda3, 1.0 / b3);
    const ComplexSpectrum anchor_hat = dft2(anchor);

    // Running sum_s sym_s G_s, refreshed as each g_a is replaced (Gauss-Seidel).
    std::vector<ComplexSpectrum> G(S);
    ComplexSpectrum synth(state.v.rows(), state.v.cols());
    for (std::size_t s = 0; s < S; ++s) {
        G[s] = dft2(state.g[s]);
        for (std::size_t i = 0; i < synth.size(); ++i)
            synth[i] += sym[s][i] * G[s][i];
    }

    for (std::size_t a = 0; a < S; ++a) {
        RealImage wl = state.w[a];
        wl.add_scaled(state.lambda2[a], 1.0 / b2);
        const ComplexSpectrum wl_hat = dft2(wl);

        ComplexSpectrum rhs(synth.rows(), synth.cols());
        for (std::size_t i = 0; i < rhs.size(); ++i) {
            const Complex others = synth[i] - sym[a][i] * G[a][i];
            rhs[i] = b2 * wl_hat[i] + b3 * std::conj(sym[a][i]) * (anchor_hat[i] - others);
        }
        state.g[a] = apply_kernel(ctx.kernels.A[a], std::move(rhs));

        const ComplexSpectrum updated = dft2(state.g[a]);
        for (std::size_t i = 0; i < synth.size(); ++i)
            synth[i] += sym[a][i] * (updated[i] - G[a][i]);
        G[a] = updated;
    }
}

RealImage v_target(const DecompositionState& state, const SolverContext& ctx)
{
    const double b3 = ctx.betas.beta3, b4 = ctx.betas.beta4;
    RealImage texture = g_synthesis(state.g, ctx.g_bank);
    texture.add_scaled(state.lambda3, -1.0 / b3);

    RealImage data = ctx.f - state.u - state.eps;
    data.add_scaled(state.lambda4, 1.0 / b4);

    texture *= b3 / (b3 + b4);
    texture.add_scaled(data, b4 / (b3 + b4));
    return texture;
}

void solve_v(DecompositionState& state, const SolverContext& ctx)
{
    const double b3 = ctx.betas.beta3, b4 = ctx.betas.beta4;
    state.v = shrink(v_target(state, ctx), state.mu2 / (b3 + b4));
}

void solve_u(DecompositionState& state, const SolverContext& ctx)
{
    const double b1 = ctx.betas.beta1, b4 = ctx.betas.beta4;

    RealImage data = ctx.f - state.v - state.eps;
    data.add_scaled(state.lambda4, 1.0 / b4);
    ComplexSpectrum rhs = dft2(data);
    rhs *= Complex(b4);

    for (std::size_t l = 0; l < ctx.tv_bank.count(); ++l) {
        RealImage rl = state.r[l];
        rl.add_scaled(state.lambda1[l], 1.0 / b1);
        const ComplexSpectrum R = dft2(rl);
        const auto& sym = ctx.kernels.tv_symbols[l];
        for (std::size_t i = 0; i < rhs.size(); ++i)
            rhs[i] += b1 * std::conj(sym[i]) * R[i];
    }
    state.u = apply_kernel(ctx.kernels.X, std::move(rhs));
}

void solve_eps(DecompositionState& state, const SolverContext& ctx)
{
    const double delta = ctx.params.delta;
    if (delta == 0.0) {
        // Zero radius: the feasible set is {0} in both modes.
        state.eps = RealImage(ctx.f.rows(), ctx.f.cols());
        return;
    }
    RealImage q = ctx.f - state.u - state.v;
    q.add_scaled(state.lambda4, 1.0 / ctx.betas.beta4);

    if (ctx.params.eps_mode == EpsMode::Cst) {
        state.eps = q - ctx.transform.cst(q, delta);
    } else {
        if (!ctx.transform.is_parseval())
            throw std::invalid_argument("project mode needs a Parseval frame; use the wedge transform");
        state.eps = ctx.transform.project_linf(q, delta, ctx.params.projection);
    }
}

void update_multipliers(DecompositionState& state, const SolverContext& ctx)
{
    const auto& [b1, b2, b3, b4] = ctx.betas;
    const double gamma = ctx.params.gamma;

    for (std::size_t b = 0; b < ctx.tv_bank.count(); ++b) {
        RealImage gap = state.r[b] - directional_derivative(state.u, b, ctx.tv_bank);
        state.lambda1[b].add_scaled(gap, gamma * b1);
    }
    for (std::size_t a = 0; a < ctx.g_bank.count(); ++a)
        state.lambda2[a].add_scaled(state.w[a] - state.g[a], gamma * b2);
    state.lambda3.add_scaled(state.v - g_synthesis(state.g, ctx.g_bank), gamma * b3);
    state.lambda4.add_scaled(reconstruction_error(ctx.f, state), gamma * b4);
}

double compute_mu1(const DecompositionState& state, const SolverContext& ctx)
{
    double peak = 0.0;
    for (std::size_t a = 0; a < ctx.g_bank.count(); ++a)
        peak = std::max(peak, norm_linf(w_target(state, ctx, a)));
    return ctx.params.c_mu1 * ctx.betas.beta2 * peak;
}

double compute_mu2(const DecompositionState& state, const SolverContext& ctx)
{
    return ctx.params.c_mu2 * (ctx.betas.beta3 + ctx.betas.beta4) * norm_linf(v_target(state, ctx));
}

double augmented_lagrangian(const DecompositionState& state, const SolverContext& ctx)
{
    const auto& [b1, b2, b3, b4] = ctx.betas;
    const auto sq = [](const RealImage& x) { return dot(x, x); };

    double value = state.mu2 * norm_l1(state.v);
    for (std::size_t l = 0; l < ctx.tv_bank.count(); ++l) {
        value += norm_l1(state.r[l]);
        RealImage gap = state.r[l] - directional_derivative(state.u, l, ctx.tv_bank);
        gap.add_scaled(state.lambda1[l], 1.0 / b1);
        value += 0.5 * b1 * sq(gap);
    }
    for (std::size_t s = 0; s < ctx.g_bank.count(); ++s) {
        value += state.mu1 * norm_l1(state.w[s]);
        RealImage gap = state.w[s] - state.g[s];
        gap.add_scaled(state.lambda2[s], 1.0 / b2);
        value += 0.5 * b2 * sq(gap);
    }
    RealImage tex_gap = state.v - g_synthesis(state.g, ctx.g_bank);
    tex_gap.add_scaled(state.lambda3, 1.0 / b3);
    value += 0.5 * b3 * sq(tex_gap);

    RealImage rec_gap = reconstruction_error(ctx.f, state);
    rec_gap.add_scaled(state.lambda4, 1.0 / b4);
    value += 0.5 * b4 * sq(rec_gap);
    return value;
}

double relative_error(const RealImage& u_t, const RealImage& u_prev)
{
    const double denom = std::max(norm_l2(u_prev), std::numeric_limits<double>::min());
    return norm_l2(u_t - u_prev) / denom;
}

RealImage reconstruction_error(const RealImage& f, const DecompositionState& state)
{
    return f - state.u - state.v - state.eps;
}

RunResult run(const RealImage& f, const SolverParams& params, const IterationObserver& observer)
{
    const SolverContext ctx(f, params);
    RunResult result{DecompositionState::initial(f, params.L, params.S), {}, ctx.betas};
    DecompositionState& st = result.state;

    for (std::size_t t = 1; t <= params.iterations; ++t) {
        const RealImage u_prev = st.u;

        solve_r(st, ctx);
        require_finite(st.r, "r");
        st.mu1 = compute_mu1(st, ctx);
        solve_w(st, ctx);
        require_finite(st.w, "w");
        solve_g(st, ctx);
        require_finite(st.g, "g");
        st.mu2 = compute_mu2(st, ctx);
        solve_v(st, ctx);
        require_finite(st.v, "v");
        solve_u(st, ctx);
        require_finite(st.u, "u");
        solve_eps(st, ctx);
        require_finite(st.eps, "eps");
        update_multipliers(st, ctx);
        require_finite(st.lambda1, "lambda1");
        require_finite(st.lambda2, "lambda2");
        require_finite(st.lambda3, "lambda3");
        require_finite(st.lambda4, "lambda4");
        st.iteration = t;

        const RealImage recon = reconstruction_error(f, st);
        TraceRecord rec{};
        rec.iter = t;
        rec.rel_err_u = relative_error(st.u, u_prev);
        rec.l2_recon = norm_l2(recon);
        rec.linf_recon = norm_linf(recon);
        rec.dtv_u = directional_tv(st.u, ctx.tv_bank);
        rec.l1_v = norm_l1(st.v);
        rec.sup_eps = ctx.transform.sup_coeff(st.eps);
        rec.mu1 = st.mu1;
        rec.mu2 = st.mu2;
        result.trace.records.push_back(rec);

        if (observer)
            observer(st, ctx);
        if (params.early_stop_tol > 0.0 && rec.rel_err_u < params.early_stop_tol)
            break;
    }
    return result;
}

}  // namespace dg3pd
