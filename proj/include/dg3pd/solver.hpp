#pragma once

#include "dg3pd/band_transform.hpp"
#include "dg3pd/directional.hpp"
#include "dg3pd/lattice.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace dg3pd {

enum class EpsMode { Cst, Project };

std::string to_string(EpsMode mode);
EpsMode parse_eps_mode(const std::string& name);

/// Solver configuration. The defaults (beta4 = 0.04, theta = 0.9, c1 = 1,
/// c2 = 1.3, c_mu = 0.03, gamma = 1, L = S = 9, 20 iterations, delta = 10)
/// work well on 8-bit natural images.
struct SolverParams {
    std::size_t L = 9;
    std::size_t S = 9;
    double beta4 = 0.04;
    double theta = 0.9;
    double c1 = 1.0;
    double c2 = 1.3;
    double c_mu1 = 0.03;
    double c_mu2 = 0.03;
    double gamma = 1.0;  // multiplier step rate; 0 gives the quadratic penalty method
    double delta = 10.0;
    std::size_t iterations = 20;
    EpsMode eps_mode = EpsMode::Cst;
    TransformSpec transform{};
    // Stop early once relative_error(u_t, u_{t-1}) < this; <= 0 disables.
    double early_stop_tol = 0.0;
    ProjectionOptions projection{};

    /// Throws std::invalid_argument describing the first bad field.
    void validate() const;
};

struct Betas {
    double beta1;
    double beta2;
    double beta3;
    double beta4;
};

/// beta3 = theta/(1-theta) beta4, beta2 = c2 beta3, beta1 = c1 beta4.
Betas derive_betas(const SolverParams& p);

struct DecompositionState {
    RealImage u, v, eps;
    std::vector<RealImage> r;        // L
    std::vector<RealImage> w, g;     // S
    std::vector<RealImage> lambda1;  // L
    std::vector<RealImage> lambda2;  // S
    RealImage lambda3, lambda4;
    double mu1 = 0.0;
    double mu2 = 0.0;
    std::size_t iteration = 0;

    /// u = f, everything else zero.
    static DecompositionState initial(const RealImage& f, std::size_t L, std::size_t S);
};

/// Fourier-domain inverses for the g- and u-subproblems, fixed per run.
struct SpectralKernels {
    std::vector<ComplexSpectrum> tv_symbols;  // L directional symbols for u
    std::vector<ComplexSpectrum> g_symbols;   // S directional symbols for g
    std::vector<ComplexSpectrum> A;           // [beta2 + beta3 |sym_a|^2]^-1, one per a
    ComplexSpectrum X;                        // [beta4 + beta1 sum_l |sym_l|^2]^-1

    static SpectralKernels build(std::size_t rows, std::size_t cols, const DirectionBank& tv_bank,
                                 const DirectionBank& g_bank, const Betas& betas);
};

/// Everything a run needs besides the iterate: data, parameters and the
/// per-run precomputations.
struct SolverContext {
    SolverContext(RealImage f, SolverParams params);

    RealImage f;
    SolverParams params;
    Betas betas;
    DirectionBank tv_bank;
    DirectionBank g_bank;
    SpectralKernels kernels;
    BandTransform transform;
};

// Subproblem updates, each overwriting its block of `state` in place.
void solve_r(DecompositionState& state, const SolverContext& ctx);
void solve_w(DecompositionState& state, const SolverContext& ctx);
void solve_g(DecompositionState& state, const SolverContext& ctx);
void solve_v(DecompositionState& state, const SolverContext& ctx);
void solve_u(DecompositionState& state, const SolverContext& ctx);
void solve_eps(DecompositionState& state, const SolverContext& ctx);
void update_multipliers(DecompositionState& state, const SolverContext& ctx);

/// t_{w_a} = g_a - lambda2_a / beta2.
RealImage w_target(const DecompositionState& state, const SolverContext& ctx, std::size_t a);
/// t_v, the weighted average of the two quadratic anchors of v.
RealImage v_target(const DecompositionState& state, const SolverContext& ctx);

/// mu1 = c_mu1 beta2 max_{a,k} |t_{w_a}[k]|  (joint max over directions).
double compute_mu1(const DecompositionState& state, const SolverContext& ctx);
/// mu2 = c_mu2 (beta3 + beta4) max_k |t_v[k]|.
double compute_mu2(const DecompositionState& state, const SolverContext& ctx);

/// Augmented Lagrangian value without the indicator of the residual set.
double augmented_lagrangian(const DecompositionState& state, const SolverContext& ctx);

/// ||u_t - u_prev|| / max(||u_prev||, tiny).
double relative_error(const RealImage& u_t, const RealImage& u_prev);

struct TraceRecord {
    std::size_t iter;
    double rel_err_u;
    double l2_recon;
    double linf_recon;
    double dtv_u;
    double l1_v;
    double sup_eps;
    double mu1;
    double mu2;
};

/// One CSV line (no newline) in the ConvergenceTrace column order; doubles
/// are written with 17 significant digits.
std::string csv_row(const TraceRecord& r);

struct ConvergenceTrace {
    std::vector<TraceRecord> records;

    static constexpr const char* kCsvHeader = "iter,rel_err_u,l2_recon,linf_recon,dtv_u,l1_v,sup_eps,mu1,mu2";
    void write_csv(std::ostream& out) const;
    std::string to_csv() const;
};

struct RunResult {
    DecompositionState state;
    ConvergenceTrace trace;
    Betas betas;
};

/// Called after each finished iteration.
using IterationObserver = std::function<void(const DecompositionState&, const SolverContext&)>;

/// f - u - v - eps.
RealImage reconstruction_error(const RealImage& f, const DecompositionState& state);

/// Runs the iteration r -> w -> g -> v -> u -> eps -> multipliers for
/// params.iterations steps. Throws std::runtime_error naming the stage if an
/// update produces non-finite values.
RunResult run(const RealImage& f, const SolverParams& params, const IterationObserver& observer = {});

}  // namespace dg3pd
