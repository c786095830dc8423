// Batch front-end: analyze, synthesize, simulate, verify, ensemble.
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "monotrack/errors.hpp"
#include "monotrack/io.hpp"

namespace fs = std::filesystem;
using namespace monotrack;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNotSolvable = 2, kAssumption = 3, kNumerical = 4 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Job {
    std::string command;
    std::string system_path;
    std::optional<std::vector<double>> lambdas;
    std::optional<std::vector<double>> reference;
    std::vector<std::vector<double>> x0;
    std::optional<double> rho;
    std::uint64_t seed = 1;
    std::string out = ".";
    std::optional<std::string> replay;
    std::optional<double> tol_rank;
    std::optional<double> horizon;
    std::optional<Index> samples;
    std::vector<double> free_pool;
    int trials = 100;
    int random_systems = 0;
    std::vector<Index> dims;
    bool long_format = false;
};

struct Flags {
    std::string config, system, lambdas, reference, rho, seed, out, replay, tol_rank, horizon, samples, pool, trials,
        random, dims;
    std::vector<std::string> x0;
    bool long_format = false;
};

std::vector<double> parse_list(const std::string& text, const std::string& what)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size() && item.find_first_not_of(" \t", used) != std::string::npos)
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse " + what + " entry '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError(what + " is empty");
    return out;
}

double parse_number(const std::string& text, const std::string& what)
{
    const auto v = parse_list(text, what);
    if (v.size() != 1) throw ConfigError(what + " must be a single number");
    return v.front();
}

std::string resolve(const std::string& path, const fs::path& base)
{
    const fs::path p(path);
    return p.is_absolute() ? p.string() : (base / p).string();
}

std::vector<double> json_list(const json& j, const std::string& what)
{
    if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : j) {
        if (!x.is_number()) throw ConfigError(what + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

Job build_job(const std::string& command, const Flags& f)
{
    Job job;
    job.command = command;
    if (!f.config.empty()) {
        json cfg;
        try {
            cfg = io::read_json(f.config);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        const fs::path base = fs::path(f.config).parent_path();
        if (cfg.contains("system")) job.system_path = resolve(cfg["system"].get<std::string>(), base);
        if (cfg.contains("lambdas")) job.lambdas = json_list(cfg["lambdas"], "lambdas");
        if (cfg.contains("reference")) job.reference = json_list(cfg["reference"], "reference");
        if (cfg.contains("x0"))
            for (const auto& x : cfg["x0"]) job.x0.push_back(json_list(x, "x0"));
        if (cfg.contains("rho")) job.rho = cfg["rho"].get<double>();
        if (cfg.contains("seed")) job.seed = cfg["seed"].get<std::uint64_t>();
        if (cfg.contains("out")) job.out = resolve(cfg["out"].get<std::string>(), base);
        if (cfg.contains("replay")) job.replay = resolve(cfg["replay"].get<std::string>(), base);
        if (cfg.contains("tol_rank")) job.tol_rank = cfg["tol_rank"].get<double>();
        if (cfg.contains("horizon")) job.horizon = cfg["horizon"].get<double>();
        if (cfg.contains("samples")) job.samples = cfg["samples"].get<Index>();
        if (cfg.contains("free_pool")) job.free_pool = json_list(cfg["free_pool"], "free_pool");
        if (cfg.contains("trials")) job.trials = cfg["trials"].get<int>();
    }
    if (!f.system.empty()) job.system_path = f.system;
    if (!f.lambdas.empty()) job.lambdas = parse_list(f.lambdas, "--lambdas");
    if (!f.reference.empty()) job.reference = parse_list(f.reference, "--reference");
    if (!f.x0.empty()) {
        job.x0.clear();
        for (const auto& x : f.x0) job.x0.push_back(parse_list(x, "--x0"));
    }
    if (!f.rho.empty()) job.rho = parse_number(f.rho, "--rho");
    if (!f.seed.empty()) job.seed = static_cast<std::uint64_t>(parse_number(f.seed, "--seed"));
    if (!f.out.empty()) job.out = f.out;
    if (!f.replay.empty()) job.replay = f.replay;
    if (!f.tol_rank.empty()) job.tol_rank = parse_number(f.tol_rank, "--tol-rank");
    if (!f.horizon.empty()) job.horizon = parse_number(f.horizon, "--horizon");
    if (!f.samples.empty()) job.samples = static_cast<Index>(parse_number(f.samples, "--samples"));
    if (!f.pool.empty()) job.free_pool = parse_list(f.pool, "--free-pool");
    if (!f.trials.empty()) job.trials = static_cast<int>(parse_number(f.trials, "--trials"));
    if (!f.random.empty()) job.random_systems = static_cast<int>(parse_number(f.random, "--random-systems"));
    if (!f.dims.empty())
        for (double d : parse_list(f.dims, "--dims")) job.dims.push_back(static_cast<Index>(d));
    job.long_format = f.long_format;

    if (job.system_path.empty()) throw ConfigError("a system file is required (--system or config \"system\")");
    const bool needs_spec = command == "synthesize" || command == "simulate" || command == "verify";
    if ((needs_spec || command == "ensemble") && !job.lambdas) throw ConfigError(command + " requires --lambdas");
    if (needs_spec && !job.reference) throw ConfigError(command + " requires --reference");
    if ((command == "simulate" || command == "verify") && job.x0.empty())
        throw ConfigError(command + " requires at least one --x0");
    if (job.trials < 1) throw ConfigError("--trials must be positive");
    if (job.random_systems > 0 && job.dims.size() != 3) throw ConfigError("--random-systems needs --dims n,m,p");
    return job;
}

std::string timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_json(const Job& job, const std::string& name, json body)
{
    body["timestamp"] = timestamp();
    io::write_text((fs::path(job.out) / name).string(), body.dump(2) + "\n");
}

SubspaceOptions subspace_options(const Job& job)
{
    SubspaceOptions so;
    so.seed = job.seed;
    if (job.tol_rank) so.tol.relative_rank_tol = *job.tol_rank;
    so.tol.validate();
    so.zeros.tol = so.tol;
    return so;
}

std::vector<double> pool_for(const Job& job, const LtiSystem& sys, const SubspaceOptions& so)
{
    if (!job.free_pool.empty()) return job.free_pool;
    return default_pool(sys.domain(), static_cast<std::size_t>(sys.n() + 2), invariant_zeros(sys, so.zeros),
                        so.exclusion_radius);
}

std::string zero_text(Complex z)
{
    std::ostringstream os;
    os << io::format_number(z.real());
    if (z.imag() != 0.0) os << (z.imag() > 0 ? "+" : "-") << io::format_number(std::abs(z.imag())) << "i";
    return os.str();
}

int run_analyze(const Job& job, const LtiSystem& sys)
{
    const SubspaceOptions so = subspace_options(job);
    const auto zeros = invariant_zeros(sys, so.zeros);
    const auto audit = audit_assumptions(sys, so.zeros);
    const auto pool = pool_for(job, sys, so);

    json body{{"system_hash", fixture_hash(sys)},
              {"n", sys.n()},
              {"m", sys.m()},
              {"p", sys.p()},
              {"time_domain", to_string(sys.domain())},
              {"normal_rank", normal_rank(sys, so.zeros)},
              {"zeros", io::zeros_to_json(zeros)},
              {"assumptions", io::audit_to_json(audit)}};
    std::ostringstream txt;
    txt << "system " << sys.n() << " states, " << sys.m() << " inputs, " << sys.p() << " outputs ("
        << to_string(sys.domain()) << ")\n";
    txt << "invariant zeros:";
    for (const auto& z : zeros)
        txt << " " << zero_text(z.value) << (z.is_minimum_phase ? " (minimum phase)" : "");
    txt << (zeros.empty() ? " none\n" : "\n");
    txt << "assumptions: right invertible " << audit.right_invertible << ", stabilizable " << audit.stabilizable
        << ", no zero at tracking frequency " << audit.no_zero_at_tracking_frequency
        << ", distinct minimum-phase zeros " << audit.distinct_min_phase_zeros << "\n";

    const PairedBasis rs = rstar(sys, std::nullopt, pool, so);
    body["dim_rstar"] = rs.dim();
    body["dim_vstar"] = vstar_recursive(sys, so.tol).dim();
    txt << "dim R* = " << rs.dim() << ", dim V* = " << body["dim_vstar"].get<Index>() << "\n";
    json rj = json::array();
    std::vector<Basis> rjb;
    for (Index j = 0; j < sys.p(); ++j) {
        const PairedBasis b = rstar(sys, j, pool, so);
        rjb.push_back(b.basis());
        rj.push_back(json{{"output", j + 1}, {"dim", b.dim()}});
        txt << "dim R*_" << j + 1 << " = " << b.dim() << "\n";
    }
    body["dim_rstar_j"] = rj;

    int code = kOk;
    if (audit.all_pass()) {
        const PairedBasis vg = vstar_g(sys, pool, so);
        body["dim_vstar_g"] = vg.dim();
        body["vstar_g"] = io::paired_basis_to_json(vg);
        txt << "dim V*g = " << vg.dim() << "\n";
        const auto verdict = check_lambda_free(sys, vg.basis(), rjb, so.tol);
        body["lambda_free_verdict"] = io::verdict_to_json(verdict);
        txt << "lambda-free condition: " << (verdict.solvable ? "satisfied" : "violated") << "\n";
        for (const auto& f : verdict.failing_subsets) {
            txt << "  failing subset {";
            for (std::size_t i = 0; i < f.subset.size(); ++i) txt << (i ? "," : "") << f.subset[i] + 1;
            txt << "}: dimension " << f.achieved << " < " << f.required << "\n";
        }
    } else {
        body["dim_vstar_g"] = nullptr;
        txt << "V*g not computed: standing assumptions fail\n";
        code = kAssumption;
    }
    write_json(job, "analysis.json", body);
    io::write_text((fs::path(job.out) / "analysis.txt").string(), txt.str());
    std::cout << txt.str();
    return code;
}

SynthesisSpec make_spec(const Job& job, const LtiSystem& sys)
{
    SynthesisSpec spec;
    spec.lambdas = *job.lambdas;
    spec.reference = Eigen::Map<const Vector>(job.reference->data(), static_cast<Index>(job.reference->size()));
    spec.free_pool = job.free_pool;
    spec.seed = job.seed;
    spec.subspace = subspace_options(job);
    if (job.replay) spec.replay = io::load_replay(*job.replay, sys);
    return spec;
}

// Verdict for a tuple that synthesis rejected, for the report.
SolvabilityVerdict verdict_for(const Job& job, const LtiSystem& sys, const SynthesisSpec& spec)
{
    const SubspaceOptions so = spec.subspace;
    const PairedBasis vg = spec.replay && spec.replay->vstar_g ? *spec.replay->vstar_g
                                                               : vstar_g(sys, pool_for(job, sys, so), so);
    return check_generalized(sys, vg.basis(), spec.lambdas, rstar_j_at(sys, spec.lambdas, so), so);
}

int report_not_solvable(const Job& job, const LtiSystem& sys, const SynthesisSpec& spec, const Error& e)
{
    json body = io::verdict_to_json(verdict_for(job, sys, spec));
    body["message"] = e.what();
    write_json(job, "verdict.json", body);
    std::cerr << e.what() << "\n";
    return kNotSolvable;
}

int run_synthesize(const Job& job, const LtiSystem& sys)
{
    const SynthesisSpec spec = make_spec(job, sys);
    FeedbackResult fb;
    try {
        fb = synthesize(sys, spec);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotSolvable) return report_not_solvable(job, sys, spec, e);
        throw;
    }
    write_json(job, "feedback.json", io::feedback_to_json(fb));
    std::ostringstream csv;
    io::write_gain_csv(csv, fb.F);
    io::write_text((fs::path(job.out) / "gain.csv").string(), csv.str());
    std::cout << "gain written to " << (fs::path(job.out) / "gain.csv").string() << "\n";
    return kOk;
}

struct Simulated {
    FeedbackResult fb;
    std::vector<SimulationTrace> traces;
    RateSpec rate;
};

std::optional<Simulated> run_pipeline(const Job& job, const LtiSystem& sys, int& code)
{
    const SynthesisSpec spec = make_spec(job, sys);
    Simulated s;
    try {
        s.fb = synthesize(sys, spec);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotSolvable) throw;
        code = report_not_solvable(job, sys, spec, e);
        return std::nullopt;
    }
    double slowest = sys.domain() == TimeDomain::Continuous ? -1e300 : 0.0;
    for (const auto& m : s.fb.assigned_modes)
        if (m) slowest = std::max(slowest, *m);
    if (sys.domain() == TimeDomain::Continuous && slowest == -1e300) slowest = -1.0;
    if (sys.domain() == TimeDomain::Discrete && slowest == 0.0) slowest = 0.5;
    s.rate = RateSpec{job.rho.value_or(slowest), sys.domain()};
    s.rate.validate();
    const double horizon = job.horizon.value_or(default_horizon(sys.domain(), s.rate.rho));
    Index samples = job.samples.value_or(default_samples(sys.domain()));
    if (sys.domain() == TimeDomain::Discrete && job.horizon && !job.samples)
        samples = static_cast<Index>(*job.horizon) + 1;
    for (const auto& x : job.x0) {
        const Vector x0 = Eigen::Map<const Vector>(x.data(), static_cast<Index>(x.size()));
        s.traces.push_back(simulate(sys, s.fb, x0, horizon, samples));
    }
    code = kOk;
    return s;
}

int run_simulate(const Job& job, const LtiSystem& sys)
{
    int code = kOk;
    const auto s = run_pipeline(job, sys, code);
    if (!s) return code;
    for (std::size_t i = 0; i < s->traces.size(); ++i) {
        const std::string stem = "trace_" + std::to_string(i + 1);
        std::ostringstream csv;
        io::write_trace_csv(csv, s->traces[i]);
        io::write_text((fs::path(job.out) / (stem + ".csv")).string(), csv.str());
        write_json(job, stem + ".json", io::trace_to_json(s->traces[i]));
        if (job.long_format) {
            std::ostringstream lng;
            io::write_trace_long_csv(lng, s->traces[i]);
            io::write_text((fs::path(job.out) / (stem + "_long.csv")).string(), lng.str());
        }
    }
    std::cout << s->traces.size() << " trace(s) written to " << job.out << "\n";
    return kOk;
}

int run_verify(const Job& job, const LtiSystem& sys)
{
    int code = kOk;
    const auto s = run_pipeline(job, sys, code);
    if (!s) return code;
    json body = io::verdict_to_json(s->fb.verdict);
    json per_x0 = json::array();
    std::vector<bool> mono(static_cast<std::size_t>(sys.p()), true), rate(mono), mode(mono);
    std::vector<double> worst(static_cast<std::size_t>(sys.p()), 0.0);
    bool all = true;
    for (const auto& tr : s->traces) {
        const TraceReport rep = verify_trace(tr, s->rate);
        json outs = json::array();
        for (std::size_t k = 0; k < rep.outputs.size(); ++k) {
            const auto& o = rep.outputs[k];
            mono[k] = mono[k] && o.monotone != MonotoneStatus::NotMonotone;
            rate[k] = rate[k] && o.rate_ok;
            mode[k] = mode[k] && o.mode_matches;
            if (!o.fit.instantaneous) worst[k] = std::max(worst[k], o.fit.relative_residual);
            outs.push_back(json{{"output", k + 1},
                                {"monotone", to_string(o.monotone)},
                                {"rate_ok", o.rate_ok},
                                {"fitted_mode", o.fit.instantaneous ? json(nullptr) : json(o.fit.mode)},
                                {"fitted_coefficient", o.fit.coefficient},
                                {"fit_residual", o.fit.relative_residual}});
        }
        all = all && rep.passes();
        per_x0.push_back(json{{"x0", io::trace_to_json(tr)["x0"]}, {"outputs", outs}, {"passes", rep.passes()}});
    }
    json per_output = json::array();
    for (Index k = 0; k < sys.p(); ++k) {
        const auto& m = s->fb.assigned_modes[static_cast<std::size_t>(k)];
        const auto ku = static_cast<std::size_t>(k);
        per_output.push_back(json{{"output", k + 1},
                                  {"mode", m ? json(*m) : json("instantaneous")},
                                  {"monotone", static_cast<bool>(mono[ku])},
                                  {"rate_ok", static_cast<bool>(rate[ku])},
                                  {"mode_matches", static_cast<bool>(mode[ku])},
                                  {"fit_residual", worst[ku]}});
    }
    body["per_output"] = per_output;
    body["per_x0"] = per_x0;
    body["rho"] = s->rate.rho;
    body["passes"] = all;
    body["note"] = "strict monotonicity is certified as non-strict monotonicity of the samples plus a single "
                   "nonzero exponential mode per output";
    write_json(job, "verdict.json", body);
    std::cout << (all ? "all outputs monotone, rate bound met, single-mode fits within tolerance\n"
                      : "verification failed; see verdict.json\n");
    return all ? kOk : kNumerical;
}

int run_ensemble(const Job& job, const LtiSystem& sys)
{
    const SubspaceOptions so = subspace_options(job);
    const GenericityStats st = genericity_trial(sys, *job.lambdas, job.trials, job.seed, so);
    json body{{"fixture_hash", fixture_hash(sys)}, {"base_seed", job.seed}, {"genericity", io::stats_to_json(st)}};
    bool ok = st.rank_deficiency_events() == 0 && st.synthesis_failures == 0;
    if (job.random_systems > 0) {
        json batch = json::array();
        for (int i = 0; i < job.random_systems; ++i) {
            GeneratorSpec g;
            g.n = job.dims[0];
            g.m = job.dims[1];
            g.p = job.dims[2];
            g.domain = sys.domain();
            g.seed = job.seed + static_cast<std::uint64_t>(i);
            json entry{{"seed", g.seed}};
            try {
                const LtiSystem r = generate(g);
                const auto pool = default_pool(r.domain(), static_cast<std::size_t>(r.n() + 2),
                                               invariant_zeros(r, so.zeros), so.exclusion_radius);
                const PairedBasis rs = rstar(r, std::nullopt, pool, so);
                const Basis oracle = rstar_recursive(r, so.tol);
                const bool match = spans_equal(rs.V, oracle.columns, 1e-8, so.tol);
                entry["hash"] = fixture_hash(r);
                entry["dim_rstar"] = rs.dim();
                entry["oracle_match"] = match;
                ok = ok && match;
            } catch (const Error& e) {
                entry["error"] = e.what();
                ok = false;
            }
            batch.push_back(entry);
        }
        body["random_batch"] = batch;
    }
    write_json(job, "ensemble.json", body);
    std::cout << st.full_rank_successes << "/" << st.trials << " trials succeeded\n";
    return ok ? kOk : kNumerical;
}

int exit_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::NotSolvable: return kNotSolvable;
    case ErrorCode::AssumptionViolated: return kAssumption;
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::UnstableLambda:
    case ErrorCode::LambdaAtZero:
    case ErrorCode::TooManyOutputs: return kConfig;
    default: return kNumerical;
    }
}

void add_common(CLI::App* cmd, Flags& f)
{
    cmd->add_option("--config", f.config, "JSON job file; flags override its fields");
    cmd->add_option("--system", f.system, "system JSON file");
    cmd->add_option("--lambdas", f.lambdas, "comma-separated mode per output");
    cmd->add_option("--reference", f.reference, "comma-separated step reference");
    cmd->add_option("--x0", f.x0, "comma-separated initial state (repeatable)");
    cmd->add_option("--rho", f.rho, "rate bound");
    cmd->add_option("--seed", f.seed, "seed for randomized constructions");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--replay-vg", f.replay, "replay JSON with V*g basis and direction pairs");
    cmd->add_option("--tol-rank", f.tol_rank, "relative rank tolerance override");
    cmd->add_option("--horizon", f.horizon, "simulation horizon (seconds or steps)");
    cmd->add_option("--samples", f.samples, "number of samples");
    cmd->add_option("--free-pool", f.pool, "comma-separated stable values for V*g");
    cmd->add_option("--trials", f.trials, "ensemble trial count");
    cmd->add_option("--random-systems", f.random, "ensemble: number of generated systems");
    cmd->add_option("--dims", f.dims, "ensemble: n,m,p of generated systems");
    cmd->add_flag("--long", f.long_format, "also write long-format traces");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monotonic tracking: analysis, synthesis and verification"};
    app.require_subcommand(1);
    Flags flags;
    std::vector<std::string> names{"analyze", "synthesize", "simulate", "verify", "ensemble"};
    for (const auto& name : names) add_common(app.add_subcommand(name), flags);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        const Job job = build_job(command, flags);
        std::error_code ec;
        fs::create_directories(job.out, ec);
        if (ec) throw ConfigError("cannot create output directory " + job.out);
        LtiSystem sys = [&] {
            try {
                return io::load_system(job.system_path);
            } catch (const Error& e) {
                throw ConfigError(std::string("invalid system file: ") + e.what());
            } catch (const std::exception& e) {
                throw ConfigError(e.what());
            }
        }();
        if (command == "analyze") return run_analyze(job, sys);
        if (command == "synthesize") return run_synthesize(job, sys);
        if (command == "simulate") return run_simulate(job, sys);
        if (command == "verify") return run_verify(job, sys);
        return run_ensemble(job, sys);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return exit_for(e.code());
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
}
