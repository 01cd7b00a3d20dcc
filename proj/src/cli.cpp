#include "dg3pd/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dg3pd::cli {

namespace fs = std::filesystem;

namespace {

std::string full_precision(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CLI11 reads TOML-style literal strings verbatim.
std::string quoted(const std::string& s)
{
    if (s.find('\'') == std::string::npos)
        return "'" + s + "'";
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out + "\"";
}

PhantomSpec phantom_spec(const RunConfig& cfg)
{
    PhantomSpec spec = *cfg.phantom == "builtin" ? default_phantom_spec() : load_phantom_spec(*cfg.phantom);
    if (cfg.seed)
        spec.seed = *cfg.seed;
    if (cfg.phantom_sigma)
        spec.sigma = *cfg.phantom_sigma;
    return spec;
}

// Files written so far are removed if a later write fails.
class OutputWriter {
public:
    explicit OutputWriter(fs::path dir) : dir_(std::move(dir)) {}
    OutputWriter(const OutputWriter&) = delete;
    OutputWriter& operator=(const OutputWriter&) = delete;

    ~OutputWriter()
    {
        if (committed_)
            return;
        std::error_code ec;
        for (const auto& p : written_)
            fs::remove(p, ec);
        if (created_dir_)
            fs::remove(dir_, ec);
    }

    void open()
    {
        if (!fs::exists(dir_)) {
            fs::create_directories(dir_);
            created_dir_ = true;
        } else if (!fs::is_directory(dir_)) {
            throw std::runtime_error("output path " + dir_.string() + " is not a directory");
        }
    }

    void image(const std::string& name, const RealImage& x, bool offset)
    {
        const fs::path p = dir_ / name;
        written_.push_back(p);
        save_gray(p, x, SaveOptions{offset, 8});
    }

    void text(const std::string& name, const std::string& body)
    {
        const fs::path p = dir_ / name;
        written_.push_back(p);
        std::ofstream out(p, std::ios::binary);
        out << body;
        out.close();
        if (!out)
            throw std::runtime_error("cannot write " + p.string());
    }

    void commit() { committed_ = true; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    bool created_dir_ = false;
    bool committed_ = false;
};

struct PointResult {
    SolverParams params;
    RunResult result;
};

void write_run(OutputWriter& w, const RunConfig& cfg, const RealImage& f, const PointResult& pr, bool with_denoised)
{
    const DecompositionState& st = pr.result.state;
    w.image("u.png", st.u, false);
    w.image("v.png", st.v, cfg.offset_view);
    w.image("v_bin.png", binarize_texture(st.v) * 255.0, false);
    w.image("eps.png", st.eps, cfg.offset_view);
    w.image("recon_err.png", reconstruction_error(f, st), cfg.offset_view);
    if (with_denoised)
        w.image("denoised.png", denoised(st), false);
    w.text("trace.csv", pr.result.trace.to_csv());
    w.text("params.txt", params_text(cfg, pr.params, &pr.result));
}

void log_summary(std::ostream& log, const fs::path& dir, const RunResult& r)
{
    log << "wrote " << dir.string();
    if (!r.trace.records.empty()) {
        const TraceRecord& last = r.trace.records.back();
        log << " (iterations " << last.iter << ", ||f-u-v-eps|| " << last.l2_recon << ", sup eps coeff "
            << last.sup_eps << ")";
    }
    log << '\n';
}

int single_run(const RunConfig& cfg, bool with_denoised, std::ostream& log)
{
    cfg.validate();
    const InputImage in = load_input(cfg);
    PointResult pr{effective_params(cfg, in.f.rows(), in.f.cols()), {}};
    pr.result = run(in.f, pr.params);

    OutputWriter w(cfg.out);
    w.open();
    write_run(w, cfg, in.f, pr, with_denoised);
    w.commit();
    log_summary(log, cfg.out, pr.result);
    if (with_denoised && in.clean) {
        log << "PSNR vs clean: input " << psnr(in.f, *in.clean) << " dB, denoised "
            << psnr(denoised(pr.result.state), *in.clean) << " dB\n";
    }
    return 0;
}

std::vector<std::vector<double>> grid_points(const std::vector<GridAxis>& grid)
{
    std::vector<std::vector<double>> points{{}};
    for (const auto& axis : grid) {
        std::vector<std::vector<double>> next;
        for (const auto& p : points) {
            for (double v : axis.values) {
                next.push_back(p);
                next.back().push_back(v);
            }
        }
        points = std::move(next);
    }
    return points;
}

bool is_integer_key(const std::string& key)
{
    return key == "T" || key == "L" || key == "S";
}

std::string canonical_key(const std::string& key)
{
    return key == "iters" ? "T" : key;
}

}  // namespace

void RunConfig::validate() const
{
    if (input.has_value() == phantom.has_value())
        throw std::invalid_argument("give exactly one of --input and --phantom");
    if (!input && (seed || phantom_sigma) && !phantom)
        throw std::invalid_argument("--seed and --phantom-sigma apply to phantoms only");
    if (input && (seed || phantom_sigma))
        throw std::invalid_argument("--seed and --phantom-sigma apply to phantoms only");
    if (noise_sigma < 0.0)
        throw std::invalid_argument("--noise-sigma must be nonnegative");
    if (noise_sigma > 0.0 && !(eta > 0.0))
        throw std::invalid_argument("--eta must be positive");
    params.validate();
}

InputImage load_input(const RunConfig& cfg)
{
    if (cfg.input)
        return {load_gray(*cfg.input).pixels, std::nullopt};
    Phantom ph = make_phantom(phantom_spec(cfg));
    return {std::move(ph.f), ph.cartoon + ph.texture};
}

SolverParams effective_params(const RunConfig& cfg, std::size_t rows, std::size_t cols)
{
    SolverParams p = cfg.params;
    if (cfg.noise_sigma > 0.0) {
        const BandTransform frame(p.transform, rows, cols);
        p.delta = noise_delta(cfg.noise_sigma, frame.coefficient_count(), cfg.eta);
    }
    p.validate();
    return p;
}

std::string params_text(const RunConfig& cfg, const SolverParams& p, const RunResult* result)
{
    std::ostringstream os;
    os << "# reload with: dg3pd <command> --config params.txt --out DIR\n";
    if (cfg.input)
        os << "input = " << quoted(cfg.input->string()) << '\n';
    if (cfg.phantom) {
        const PhantomSpec spec = phantom_spec(cfg);
        os << "phantom = " << quoted(*cfg.phantom) << '\n';
        os << "seed = " << spec.seed << '\n';
        os << "phantom-sigma = " << full_precision(spec.sigma) << '\n';
    }
    os << "L = " << p.L << '\n'
       << "S = " << p.S << '\n'
       << "beta4 = " << full_precision(p.beta4) << '\n'
       << "theta = " << full_precision(p.theta) << '\n'
       << "c1 = " << full_precision(p.c1) << '\n'
       << "c2 = " << full_precision(p.c2) << '\n'
       << "cmu1 = " << full_precision(p.c_mu1) << '\n'
       << "cmu2 = " << full_precision(p.c_mu2) << '\n'
       << "gamma = " << full_precision(p.gamma) << '\n'
       << "delta = " << full_precision(p.delta) << '\n'
       << "iters = " << p.iterations << '\n'
       << "eps-mode = " << to_string(p.eps_mode) << '\n'
       << "transform = " << to_string(p.transform.kind) << '\n'
       << "scales = " << p.transform.scales << '\n'
       << "orients = " << p.transform.orientations << '\n'
       << "early-stop = " << full_precision(p.early_stop_tol) << '\n'
       << "proj-iters = " << p.projection.max_iterations << '\n'
       << "proj-tol = " << full_precision(p.projection.tolerance) << '\n'
       << "offset-view = " << (cfg.offset_view ? "true" : "false") << '\n';
    if (cfg.noise_sigma > 0.0) {
        os << "# delta = eta * sigma * sqrt(2 ln #coeffs) with noise sigma " << full_precision(cfg.noise_sigma)
           << ", eta " << full_precision(cfg.eta) << '\n';
    }
    const Betas b = derive_betas(p);
    os << "# beta1 = " << full_precision(b.beta1) << '\n'
       << "# beta2 = " << full_precision(b.beta2) << '\n'
       << "# beta3 = " << full_precision(b.beta3) << '\n'
       << "# beta4 = " << full_precision(b.beta4) << '\n';
    if (result) {
        os << "# final mu1 = " << full_precision(result->state.mu1) << '\n'
           << "# final mu2 = " << full_precision(result->state.mu2) << '\n'
           << "# iterations run = " << result->state.iteration << '\n';
    }
    return os.str();
}

GridAxis parse_grid_axis(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("grid axis '" + text + "' is not key=v1,v2,...");
    GridAxis axis;
    axis.key = canonical_key(text.substr(0, eq));
    static const std::vector<std::string> known{"delta", "T", "L", "S", "gamma", "theta"};
    if (std::find(known.begin(), known.end(), axis.key) == known.end())
        throw std::invalid_argument("unknown grid key '" + axis.key + "' (use delta, T, L, S, gamma, theta)");

    std::stringstream values(text.substr(eq + 1));
    std::string tok;
    while (std::getline(values, tok, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (tok.empty() || used != tok.size() || !std::isfinite(v))
            throw std::invalid_argument("grid " + axis.key + ": bad value '" + tok + "'");
        if (is_integer_key(axis.key) && (v < 1 || v != std::floor(v)))
            throw std::invalid_argument("grid " + axis.key + ": values must be positive integers");
        axis.values.push_back(v);
    }
    if (axis.values.empty())
        throw std::invalid_argument("grid " + axis.key + ": no values");
    return axis;
}

void apply_grid_value(SolverParams& p, const std::string& key, double value)
{
    const std::string k = canonical_key(key);
    if (k == "delta")
        p.delta = value;
    else if (k == "T")
        p.iterations = static_cast<std::size_t>(value);
    else if (k == "L")
        p.L = static_cast<std::size_t>(value);
    else if (k == "S")
        p.S = static_cast<std::size_t>(value);
    else if (k == "gamma")
        p.gamma = value;
    else if (k == "theta")
        p.theta = value;
    else
        throw std::invalid_argument("unknown grid key '" + key + "'");
}

int cmd_decompose(const RunConfig& cfg, std::ostream& log)
{
    return single_run(cfg, false, log);
}

int cmd_denoise(const RunConfig& cfg, std::ostream& log)
{
    return single_run(cfg, true, log);
}

int cmd_sweep(const RunConfig& cfg, const std::vector<GridAxis>& grid, std::size_t jobs, std::ostream& log)
{
    cfg.validate();
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (grid[i].key == grid[j].key)
                throw std::invalid_argument("grid key '" + grid[i].key + "' given twice");

    const InputImage in = load_input(cfg);
    const auto points = grid_points(grid);
    std::vector<RunConfig> configs(points.size(), cfg);
    std::vector<PointResult> results(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t a = 0; a < grid.size(); ++a)
            apply_grid_value(configs[i].params, grid[a].key, points[i][a]);
        if (grid.empty())
            configs[i].out = cfg.out / "point_000";
        else {
            char name[32];
            std::snprintf(name, sizeof name, "point_%03zu", i);
            configs[i].out = cfg.out / name;
        }
        results[i].params = effective_params(configs[i], in.f.rows(), in.f.cols());
    }

    // Every point runs before anything is written, so a failing point leaves
    // no outputs behind.
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                results[i].result = run(in.f, results[i].params);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(points.size(), 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    OutputWriter root(cfg.out);
    root.open();
    std::vector<std::unique_ptr<OutputWriter>> writers;
    std::ostringstream summary;
    summary << "point";
    for (const auto& axis : grid)
        summary << ',' << axis.key;
    summary << ',' << ConvergenceTrace::kCsvHeader << '\n';
    for (std::size_t i = 0; i < points.size(); ++i) {
        writers.push_back(std::make_unique<OutputWriter>(configs[i].out));
        writers.back()->open();
        write_run(*writers.back(), configs[i], in.f, results[i], false);
        summary << i;
        for (double v : points[i])
            summary << ',' << full_precision(v);
        const auto& recs = results[i].result.trace.records;
        summary << ',' << (recs.empty() ? std::string("0,,,,,,,,") : csv_row(recs.back())) << '\n';
    }
    root.text("summary.csv", summary.str());
    for (auto& w : writers)
        w->commit();
    root.commit();
    for (std::size_t i = 0; i < points.size(); ++i)
        log_summary(log, configs[i].out, results[i].result);
    return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Cartoon + texture + residual image decomposition"};
    app.set_config("--config", "", "key = value file with the same keys as the flags; flags take precedence");
    app.require_subcommand(1, 1);
    app.fallthrough();

    RunConfig cfg;
    SolverParams& p = cfg.params;
    std::string input, phantom, eps_mode = to_string(p.eps_mode), transform = to_string(p.transform.kind);
    std::uint64_t seed = 0;
    double phantom_sigma = 0.0;

    app.add_option("--input", input, "Input image (PGM/PPM/PNG)");
    app.add_option("--phantom", phantom, "Phantom description file, or 'builtin'");
    app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
    app.add_option("--L", p.L, "Number of directions in the directional TV")->capture_default_str();
    app.add_option("--S", p.S, "Number of directions in the texture norm")->capture_default_str();
    app.add_option("--beta4", p.beta4, "Penalty on the reconstruction constraint")->capture_default_str();
    app.add_option("--theta", p.theta, "Penalty balance in (0, 1)")->capture_default_str();
    app.add_option("--c1", p.c1, "Directional TV penalty factor")->capture_default_str();
    app.add_option("--c2", p.c2, "Texture potential penalty factor")->capture_default_str();
    app.add_option("--cmu1", p.c_mu1, "Texture potential sparsity factor")->capture_default_str();
    app.add_option("--cmu2", p.c_mu2, "Texture sparsity factor")->capture_default_str();
    app.add_option("--gamma", p.gamma, "Multiplier step rate (0: quadratic penalty)")->capture_default_str();
    app.add_option("--delta", p.delta, "Residual coefficient bound")->capture_default_str();
    app.add_option("--iters", p.iterations, "Iterations")->capture_default_str();
    app.add_option("--eps-mode", eps_mode, "Residual update: cst or project")->capture_default_str();
    app.add_option("--transform", transform, "Residual frame: starlet or wedge")->capture_default_str();
    app.add_option("--scales", p.transform.scales, "Frame scales")->capture_default_str();
    app.add_option("--orients", p.transform.orientations, "Wedge orientations")->capture_default_str();
    app.add_option("--early-stop", p.early_stop_tol, "Stop when the relative change of u drops below this")
        ->capture_default_str();
    app.add_option("--proj-iters", p.projection.max_iterations, "Projection iterations (project mode)")
        ->capture_default_str();
    app.add_option("--proj-tol", p.projection.tolerance, "Projection stopping tolerance")->capture_default_str();
    app.add_flag("--offset-view,!--no-offset-view", cfg.offset_view,
                 "Write v, eps and recon_err as 150 + x (default on)");
    auto* seed_opt = app.add_option("--seed", seed, "Phantom noise seed");
    auto* psigma_opt = app.add_option("--phantom-sigma", phantom_sigma, "Phantom noise level");
    app.add_option("--noise-sigma", cfg.noise_sigma, "If > 0, set delta = eta * sigma * sqrt(2 ln #coeffs)");
    app.add_option("--eta", cfg.eta, "Scale of the noise-calibrated delta")->capture_default_str();

    auto* decompose = app.add_subcommand("decompose", "Write u, v, v_bin, eps, recon_err, trace and params");
    auto* denoise = app.add_subcommand("denoise", "As decompose, plus denoised = u + v");
    auto* sweep = app.add_subcommand("sweep", "Run a parameter grid, one subdirectory per point");
    std::vector<std::string> grid_texts;
    std::size_t jobs = 1;
    sweep->add_option("--grid", grid_texts, "Axis key=v1,v2,... over delta, T, L, S, gamma, theta; repeatable");
    sweep->add_option("--jobs", jobs, "Grid points run concurrently")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (!input.empty())
            cfg.input = input;
        if (!phantom.empty())
            cfg.phantom = phantom;
        if (seed_opt->count() > 0)
            cfg.seed = seed;
        if (psigma_opt->count() > 0)
            cfg.phantom_sigma = phantom_sigma;
        p.eps_mode = parse_eps_mode(eps_mode);
        p.transform.kind = parse_transform_kind(transform);

        if (decompose->parsed())
            return cmd_decompose(cfg, out);
        if (denoise->parsed())
            return cmd_denoise(cfg, out);
        std::vector<GridAxis> grid;
        for (const auto& g : grid_texts)
            grid.push_back(parse_grid_axis(g));
        return cmd_sweep(cfg, grid, jobs, out);
    } catch (const std::invalid_argument& e) {
        err << "dg3pd: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "dg3pd: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace dg3pd::cli
