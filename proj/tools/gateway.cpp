#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "gw/adapter/ranking.hpp"
#include "gw/context/placement.hpp"
#include "gw/daemon/config.hpp"
#include "gw/daemon/gateway.hpp"
#include "gw/daemon/stats.hpp"
#include "gw/data/convert.hpp"
#include "gw/dsl/list_registry.hpp"
#include "json.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int cmd_run(const std::optional<std::string>& config_arg) {
    using namespace gw::daemon;
    auto path = resolve_config_path(config_arg);
    std::unique_ptr<Gateway> gateway;
    try {
        auto cfg = load_config(path);
        gateway = std::make_unique<Gateway>(cfg);
        gateway->start();
    } catch (const std::exception& e) {
        std::cerr << "gateway: " << e.what() << "\n";
        return 1;
    }
    spdlog::info("gateway running with {}", path.string());
    struct sigaction sa {};
    sa.sa_handler = on_signal;
    sigemptyset(&sa.sa_mask);
    sigaction(SIGTERM, &sa, nullptr);
    sigaction(SIGINT, &sa, nullptr);
    int rc = run_daemon(*gateway, STDIN_FILENO, std::cout, g_stop);
    spdlog::info("gateway stopped");
    return rc;
}

int cmd_synth(const std::string& examples, const std::string& registry) {
    if (registry == "L") {
        auto ex = gw::dsl::load_list_examples(examples);
        gw::dsl::QTable q;
        auto r = gw::dsl::synthesize(std::span<const gw::dsl::IoExample<gw::dsl::ListValue>>(ex),
                                     gw::dsl::list_registry(), q);
        if (!r.program) {
            std::cerr << "no program found (" << r.candidates_visited << " candidates)\n";
            return 1;
        }
        std::cout << gw::dsl::serialize_program(*r.program);
        std::cerr << r.candidates_visited << " candidates visited\n";
        return 0;
    }
    if (registry == "C") {
        std::ifstream in(examples);
        if (!in) {
            std::cerr << "cannot read " << examples << "\n";
            return 1;
        }
        auto j = nlohmann::ordered_json::parse(in);
        auto sensor = gw::context::sensor_from_json(j.at("sensor"));
        auto contexts = gw::context::contexts_from_json(j.at("contexts"));
        auto expected = gw::context::contexts_from_json(j.at("expected"));
        try {
            auto prog = gw::context::learn_placement(sensor, contexts, expected);
            std::cout << gw::dsl::serialize_program(prog);
            return 0;
        } catch (const gw::context::PlacementNotFound& e) {
            std::cerr << e.what() << "\n";
            return 1;
        }
    }
    std::cerr << "unsupported registry '" << registry << "' (expected L or C)\n";
    return 2;
}

int cmd_stats(const std::string& file, const std::optional<std::string>& config_arg) {
    std::string path = file;
    if (path.empty()) {
        try {
            auto cfg = gw::daemon::load_config(gw::daemon::resolve_config_path(config_arg));
            path = cfg.stats_path.string();
        } catch (const std::exception& e) {
            std::cerr << "gateway stats: " << e.what() << "\n";
            return 1;
        }
    }
    if (path.empty()) {
        std::cerr << "gateway stats: no stats_path configured\n";
        return 1;
    }
    std::ifstream in(path);
    if (!in) {
        std::cout << gw::daemon::RunStats{}.to_json();
        return 0;
    }
    std::cout << in.rdbuf();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IoT edge gateway"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

    auto* run = app.add_subcommand("run", "run the gateway daemon");
    std::optional<std::string> run_config;
    run->add_option("config", run_config, "config file (GATEWAY_CONFIG overrides)");

    auto* convert = app.add_subcommand("convert", "convert between XML and JSON");
    std::vector<std::string> convert_args;
    convert->add_option("args", convert_args, "<file> <xml|json>")->expected(0, -1);
    convert->allow_extras();

    auto* synth = app.add_subcommand("synth", "synthesize a program from examples");
    std::string synth_examples, synth_registry;
    synth->add_option("examples", synth_examples)->required();
    synth->add_option("registry", synth_registry, "L (list) or C (context placement)")->required();

    auto* sim = app.add_subcommand("sim", "simulate connection failures");
    std::string sim_protocol;
    std::uint64_t trials = 1000, seed = 1;
    double rate = 0.0, timeout = 0.0;
    int attempts = 0;
    std::optional<double> retry_rate;
    sim->add_option("protocol", sim_protocol)->required()->check(CLI::IsMember({"mqtt", "coap"}));
    sim->add_option("--trials", trials)->check(CLI::PositiveNumber);
    sim->add_option("--rate", rate)->check(CLI::Range(0.0, 0.999999999));
    sim->add_option("--seed", seed);
    sim->add_option("--attempts", attempts, "overrides the default policy");
    sim->add_option("--timeout", timeout, "seconds; overrides the default policy");
    sim->add_option("--retry-rate", retry_rate, "failure rate of retries")->check(CLI::Range(0.0, 0.999999999));
    bool aggressive = false;
    sim->add_flag("--aggressive", aggressive, "use the aggressive retry profile");

    auto* stats = app.add_subcommand("stats", "print the daemon's stats dump");
    std::string stats_file;
    std::optional<std::string> stats_config;
    stats->add_option("--file", stats_file);
    stats->add_option("--config", stats_config);

    auto* spearman = app.add_subcommand("spearman", "Spearman rank correlation");
    std::vector<double> xs, ys;
    spearman->add_option("--x", xs)->required()->delimiter(',');
    spearman->add_option("--y", ys)->required()->delimiter(',');

    auto* probe = app.add_subcommand("probe", "UDP echo latency probe");
    std::string target;
    std::size_t count = 30;
    int probe_timeout_ms = 500;
    probe->add_option("target", target, "ip:port of an echo service")->required();
    probe->add_option("--count", count);
    probe->add_option("--timeout-ms", probe_timeout_ms);

    auto* echo = app.add_subcommand("echo-server", "serve UDP echo on ip:port");
    std::string echo_addr = "127.0.0.1:7007";
    echo->add_option("address", echo_addr);

    auto* rank_cost = app.add_subcommand("rank-cost", "search time to reach a ranking position");
    std::size_t rank = 10;
    double mean_failure = 0.35, success = 0.35;
    rank_cost->add_option("--rank", rank)->check(CLI::PositiveNumber);
    rank_cost->add_option("--mean-failure", mean_failure);
    rank_cost->add_option("--success", success);

    CLI11_PARSE(app, argc, argv);

    auto level = spdlog::level::from_str(log_level);
    spdlog::set_level(level);

    try {
        if (*run) return cmd_run(run_config);
        if (*convert) {
            auto args = convert_args;
            for (auto& extra : convert->remaining()) args.push_back(extra);
            return gw::data::run_convert(args, std::cout, std::cerr);
        }
        if (*synth) return cmd_synth(synth_examples, synth_registry);
        if (*sim) {
            gw::daemon::SimulationParams p;
            p.protocol = sim_protocol;
            p.trials = trials;
            p.failure_rate = rate;
            p.retry_failure_rate = retry_rate;
            p.seed = seed;
            p.policy = gw::adapter::default_policy(sim_protocol, aggressive);
            if (attempts > 0) p.policy.attempts = attempts;
            if (timeout > 0) p.policy.timeout_s = timeout;
            std::cout << gw::daemon::simulate_connections(p).to_json();
            return 0;
        }
        if (*stats) return cmd_stats(stats_file, stats_config);
        if (*spearman) {
            double rho = gw::daemon::spearman(xs, ys);
            std::cout << std::fixed << std::setprecision(3) << rho << "\n";
            return 0;
        }
        if (*probe) {
            auto r = gw::daemon::latency_probe(gw::net::parse_endpoint(target), count,
                                               gw::net::Millis(probe_timeout_ms));
            std::cout << "sent " << r.sent << " received " << r.received << " mean " << r.mean_s << " s std "
                      << r.std_s << " s\n";
            return 0;
        }
        if (*echo) {
            auto ep = gw::net::parse_endpoint(echo_addr);
            gw::daemon::UdpEchoServer server(ep.host, ep.port);
            std::cout << "echo on " << server.endpoint().str() << std::endl;
            signal(SIGTERM, on_signal);
            signal(SIGINT, on_signal);
            while (!g_stop) pause();
            return 0;
        }
        if (*rank_cost) {
            auto us = gw::adapter::rank_cost_us(rank, std::llround(mean_failure * 1e6), std::llround(success * 1e6));
            std::cout << std::fixed << std::setprecision(6) << static_cast<double>(us) / 1e6 << "\n";
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "gateway: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "gateway: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
