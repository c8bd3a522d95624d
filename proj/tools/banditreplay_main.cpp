// Command-line front end: generate synthetic logs, replay bandit algorithms
// on them, and run the statistical analyses. All randomness is driven by the
// --seed flag; identical invocations produce byte-identical outputs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "banditreplay/algorithms.hpp"
#include "banditreplay/log_io.hpp"
#include "banditreplay/replay.hpp"
#include "banditreplay/stats.hpp"
#include "banditreplay/world.hpp"

namespace br = banditreplay;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitUndefined = 3;

struct AlgoOptions {
    std::string name = "fixed";
    double epsilon = 0.1;
    double alpha = 1.0;
    br::ArmId fixed_arm = 0;
};

std::unique_ptr<br::BanditAlgorithm> make_algorithm(const AlgoOptions& o, int dim) {
    if (o.name == "fixed") return br::FixedPolicy::constant(o.fixed_arm).clone();
    if (o.name == "eps-greedy") return std::make_unique<br::EpsGreedy>(o.epsilon);
    if (o.name == "ucb") return std::make_unique<br::Ucb>(o.alpha);
    if (o.name == "linucb") return std::make_unique<br::LinUcb>(o.alpha, dim);
    if (o.name == "commit-first")
        return std::make_unique<br::CommitFirst>([](const br::Context& x) -> br::ArmId {
            return !x.features.empty() && x.features[0] == 1.0 ? 0 : 1;
        });
    throw std::invalid_argument("unknown algorithm '" + o.name + "'");
}

// CSV goes to --out (or stdout); human-readable notes go to stderr.
class CsvSink {
public:
    explicit CsvSink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot open output file: " + path);
        }
    }
    std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

std::vector<std::int64_t> parse_grid(const std::string& csv) {
    std::vector<std::int64_t> grid;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(std::stoll(item));
    if (grid.empty()) throw std::invalid_argument("--l-grid: empty grid");
    return grid;
}

int cmd_generate(const std::string& world_path, std::int64_t count, const std::string& out_path,
                 std::uint64_t seed) {
    br::WorldSpec spec = br::load_world_spec(world_path);
    br::Rng rng(seed);
    std::vector<br::Event> events = br::generate_log(spec.world, spec.logger, count, rng);

    br::LogHeader header;
    header.dim = spec.world.dim();
    header.logger_kind =
        spec.logger.kind == br::LoggingPolicy::Kind::uniform ? "uniform" : "explicit";
    header.seed = seed;
    header.event_count = count;
    std::int64_t written = br::write_events(out_path, header, events);

    std::map<br::ArmId, std::int64_t> freq;
    br::ArmId min_arms = 0, max_arms = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        freq[events[i].chosen] += 1;
        auto k = static_cast<br::ArmId>(events[i].arms.size());
        if (i == 0) min_arms = max_arms = k;
        min_arms = std::min(min_arms, k);
        max_arms = std::max(max_arms, k);
    }
    std::cerr << "wrote " << written << " events to " << out_path << " (K in [" << min_arms
              << ", " << max_arms << "])\n";
    for (const auto& [arm, n] : freq)
        std::cerr << "  arm " << arm << ": " << n << " ("
                  << static_cast<double>(n) / static_cast<double>(std::max<std::int64_t>(written, 1))
                  << ")\n";
    return kExitOk;
}

int cmd_replay(const std::string& log_path, const AlgoOptions& algo_opts, const std::string& mode,
               std::int64_t target_t, double p_min, std::uint64_t seed,
               const std::string& out_path) {
    br::EventReader reader(log_path);
    auto algo = make_algorithm(algo_opts, reader.header().dim);
    br::ReplayOptions opts;
    opts.keep_history = false;

    br::EvaluationResult result;
    if (mode == "infinite") {
        result = br::evaluate_infinite(*algo, reader, target_t, seed, opts);
    } else if (mode == "finite") {
        result = br::evaluate_finite(*algo, reader, seed, opts);
    } else if (mode == "rejection") {
        result = br::evaluate_rejection(*algo, reader, p_min, seed, opts);
    } else {
        throw CLI::ValidationError("--mode", "unknown mode '" + mode + "'");
    }

    CsvSink sink(out_path);
    sink.out() << "g_hat,T,L\n"
               << br::logfmt::format_double(result.g_hat) << ',' << result.T << ',' << result.L
               << '\n';
    std::cerr << algo->name() << " on " << log_path << ": g_hat=" << result.g_hat
              << " T=" << result.T << " L=" << result.L << '\n';
    return kExitOk;
}

int analyze_bounds(std::int64_t k, std::int64_t l, double g, double delta,
                   const std::string& out_path) {
    br::BoundReport r = br::deviation_bound(k, l, g, delta);
    CsvSink sink(out_path);
    sink.out() << "K,L,g,delta,gamma1,gamma2,bound\n"
               << r.arms << ',' << r.log_size << ',' << br::logfmt::format_double(r.g) << ','
               << br::logfmt::format_double(r.delta) << ','
               << br::logfmt::format_double(r.gamma1) << ','
               << br::logfmt::format_double(r.gamma2) << ','
               << br::logfmt::format_double(r.bound) << '\n';
    std::cerr << "gamma1=" << r.gamma1 << " gamma2=" << r.gamma2 << " bound=" << r.bound << '\n';
    return kExitOk;
}

int analyze_replicate(const std::string& log_path, const AlgoOptions& algo_opts,
                      std::int64_t runs, double subsample_p, std::uint64_t seed,
                      const std::string& out_path) {
    br::LogHeader header;
    std::vector<br::Event> log = br::read_all_events(log_path, &header);
    br::AlgorithmFactory factory = [&]() { return make_algorithm(algo_opts, header.dim); };
    br::ReplicationSummary s = br::replicate(factory, log, runs, subsample_p, seed);
    CsvSink sink(out_path);
    sink.out() << "algorithm,runs,excluded,subsample_p,mean,std,max,min\n"
               << algo_opts.name << ',' << s.runs << ',' << s.excluded << ','
               << br::logfmt::format_double(s.subsample_p) << ','
               << br::logfmt::format_double(s.mean) << ','
               << br::logfmt::format_double(s.std_dev) << ','
               << br::logfmt::format_double(s.max) << ',' << br::logfmt::format_double(s.min)
               << '\n';
    std::cerr << "mean=" << s.mean << " std=" << s.std_dev << " (std/mean="
              << (s.mean != 0.0 ? s.std_dev / s.mean : 0.0) << ")\n";
    return kExitOk;
}

int analyze_convergence(const std::string& world_path, const AlgoOptions& algo_opts,
                        const std::string& grid_csv, std::int64_t runs, std::uint64_t seed,
                        const std::string& out_path) {
    br::WorldSpec spec = br::load_world_spec(world_path);
    auto policy = make_algorithm(algo_opts, spec.world.dim());
    if (!policy->is_fixed_policy())
        throw CLI::ValidationError("--algo", "convergence analysis needs a fixed policy");
    std::vector<std::int64_t> grid = parse_grid(grid_csv);
    auto curve = br::convergence_curve(*policy, spec.world, grid, runs, seed);
    CsvSink sink(out_path);
    sink.out() << "L,median_error\n";
    for (const auto& p : curve)
        sink.out() << p.log_size << ',' << br::logfmt::format_double(p.median_error) << '\n';
    bool all_zero = true;
    for (const auto& p : curve) all_zero = all_zero && p.median_error == 0.0;
    if (all_zero) {
        std::cerr << "all median errors are zero (deterministic world)\n";
    } else {
        double slope = br::fit_decay_exponent(curve);
        std::cerr << "log-log decay exponent: " << slope
                  << (slope >= -0.6 && slope <= -0.4 ? " (within [-0.6, -0.4])"
                                                     : " (outside [-0.6, -0.4])")
                  << '\n';
    }
    return kExitOk;
}

int analyze_consistency(const std::string& world_path, double epsilon, double alpha,
                        std::int64_t segments, std::int64_t events_per_segment,
                        std::uint64_t seed, const std::string& out_path) {
    br::WorldSpec spec = br::load_world_spec(world_path);
    const int dim = spec.world.dim();
    std::vector<std::pair<std::string, br::AlgorithmFactory>> algos;
    algos.emplace_back("eps-greedy",
                       [epsilon]() { return std::make_unique<br::EpsGreedy>(epsilon); });
    algos.emplace_back("ucb", [alpha]() { return std::make_unique<br::Ucb>(alpha); });
    algos.emplace_back("linucb",
                       [alpha, dim]() { return std::make_unique<br::LinUcb>(alpha, dim); });
    br::ConsistencyOptions opts;
    opts.segments = segments;
    opts.events_per_segment = events_per_segment;
    auto rows = br::consistency_experiment(algos, spec.world, opts, seed);
    CsvSink sink(out_path);
    sink.out() << "segment,algorithm,g_online,g_offline,rho\n";
    for (const auto& r : rows)
        sink.out() << r.segment << ',' << r.algorithm << ','
                   << br::logfmt::format_double(r.g_online) << ','
                   << br::logfmt::format_double(r.g_offline) << ','
                   << br::logfmt::format_double(r.rho) << '\n';
    std::cerr << "emitted " << rows.size() << " (segment, algorithm) rows\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Replay-based offline evaluation of contextual bandit algorithms"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string out_path;
    AlgoOptions algo_opts;

    auto add_algo_flags = [&](CLI::App* cmd) {
        cmd->add_option("--algo", algo_opts.name, "fixed|eps-greedy|ucb|linucb|commit-first");
        cmd->add_option("--epsilon", algo_opts.epsilon, "exploration rate for eps-greedy");
        cmd->add_option("--alpha", algo_opts.alpha, "confidence width for ucb/linucb");
        cmd->add_option("--fixed-arm", algo_opts.fixed_arm, "arm played by the fixed policy");
    };

    // generate
    auto* generate = app.add_subcommand("generate", "generate a logged event file from a world");
    std::string world_path;
    std::int64_t gen_count = 0;
    generate->add_option("--world", world_path, "world config (JSON)")->required();
    generate->add_option("--l", gen_count, "number of events to log")->required();
    generate->add_option("--out", out_path, "output log path")->required();
    generate->add_option("--seed", seed, "rng seed")->required();

    // replay
    auto* replay = app.add_subcommand("replay", "evaluate an algorithm on a logged event file");
    std::string log_path, mode = "finite";
    std::int64_t target_t = 100;
    double p_min = 0.0;
    replay->add_option("--log", log_path, "event log path")->required();
    replay->add_option("--mode", mode, "infinite|finite|rejection");
    replay->add_option("--target-t", target_t, "valid events to retain (infinite mode)");
    replay->add_option("--p-min", p_min, "propensity lower bound (rejection mode)");
    replay->add_option("--seed", seed, "rng seed")->required();
    replay->add_option("--out", out_path, "CSV output path (default stdout)");
    add_algo_flags(replay);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "statistical studies of the evaluator");
    std::string kind;
    std::int64_t runs = 100, k_arms = 2, l_events = 1000, segments = 16,
                 events_per_segment = 50'000;
    double subsample_p = 0.5, g_value = 0.5, delta = 0.05;
    std::string grid_csv = "1000,10000,100000";
    analyze->add_option("--kind", kind, "replicate|convergence|bounds|consistency")->required();
    analyze->add_option("--log", log_path, "event log path (replicate)");
    analyze->add_option("--world", world_path, "world config (convergence, consistency)");
    analyze->add_option("--runs", runs, "replications / runs per grid point");
    analyze->add_option("--subsample-p", subsample_p, "per-run event keep probability");
    analyze->add_option("--l-grid", grid_csv, "comma-separated log sizes");
    analyze->add_option("--k", k_arms, "arm count (bounds)");
    analyze->add_option("--l", l_events, "log size (bounds)");
    analyze->add_option("--g", g_value, "per-trial payoff (bounds)");
    analyze->add_option("--delta", delta, "failure probability (bounds)");
    analyze->add_option("--segments", segments, "segment count (consistency)");
    analyze->add_option("--events-per-segment", events_per_segment,
                        "logged events per segment (consistency)");
    analyze->add_option("--seed", seed, "rng seed")->required();
    analyze->add_option("--out", out_path, "CSV output path (default stdout)");
    add_algo_flags(analyze);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (generate->parsed()) return cmd_generate(world_path, gen_count, out_path, seed);
        if (replay->parsed())
            return cmd_replay(log_path, algo_opts, mode, target_t, p_min, seed, out_path);
        if (analyze->parsed()) {
            if (kind == "bounds") return analyze_bounds(k_arms, l_events, g_value, delta, out_path);
            if (kind == "replicate")
                return analyze_replicate(log_path, algo_opts, runs, subsample_p, seed, out_path);
            if (kind == "convergence")
                return analyze_convergence(world_path, algo_opts, grid_csv, runs, seed, out_path);
            if (kind == "consistency")
                return analyze_consistency(world_path, algo_opts.epsilon, algo_opts.alpha,
                                           segments, events_per_segment, seed, out_path);
            std::cerr << "error: unknown analysis kind '" << kind << "'\n";
            return kExitUsage;
        }
    } catch (const br::NoValidEvents& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUndefined;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
