// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <spdlog/spdlog.h>

#include "binomial.hpp"
#include "context_fixtures.hpp"
#include "gw/adapter/ranking.hpp"
#include "gw/adapter/transports.hpp"
#include "gw/context/placement.hpp"
#include "gw/daemon/gateway.hpp"
#include "gw/daemon/stats.hpp"
#include "gw/data/convert.hpp"
#include "gw/data/doc_tree.hpp"
#include "gw/dsl/list_registry.hpp"
#include "gw/dsl/synthesizer.hpp"
#include "gw/logic/rule.hpp"
#include "interop_fixtures.hpp"
#include "xml_corpus.hpp"

namespace fs = std::filesystem;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "failed: " << what << "; ";
        }
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// 1 --------------------------------------------------------------------
void synthesis_fixtures(Check& c) {
    using gw::dsl::DslProgram;
    const double limit_s = 10.0;

    auto timed = [&](const std::string& name, auto&& fn, const DslProgram& expected) {
        auto t0 = Clock::now();
        DslProgram got = fn();
        double s = seconds_since(t0);
        c.expect(got == expected, name + " = " + gw::dsl::describe(got));
        c.expect(s < limit_s, name + " took " + std::to_string(s) + " s");
        c.detail << name << " " << std::fixed << std::setprecision(3) << s << "s ";
    };

    timed("interop P->G", [] {
        gw::interop::Translator tr;
        return tr.learn_translation(fixtures::paho_to_gmqtt_examples(), gw::interop::Dialect::Paho,
                                    gw::interop::Dialect::Gmqtt).program;
    }, DslProgram{"I", {2, 3}});
    timed("interop G->P", [] {
        gw::interop::Translator tr;
        return tr.learn_translation(fixtures::gmqtt_to_paho_examples(), gw::interop::Dialect::Gmqtt,
                                    gw::interop::Dialect::Paho).program;
    }, DslProgram{"I", {4}});
    timed("context location", [] {
        return gw::context::learn_placement(fixtures::sensor101(), fixtures::scenario_contexts(),
                                            fixtures::location_expected());
    }, DslProgram{gw::context::kContextRegistryId, {4, 5, 7}});
    timed("context time", [] {
        return gw::context::learn_placement(fixtures::sensor101(), fixtures::scenario_contexts(),
                                            fixtures::time_expected());
    }, DslProgram{gw::context::kContextRegistryId, {1, 5, 7}});

    auto clustering = [](const char* file) {
        return [file] {
            auto ex = gw::dsl::load_list_examples(std::string(GW_FIXTURE_DIR) + "/" + file);
            gw::dsl::QTable q;
            auto r = gw::dsl::synthesize<gw::dsl::ListValue>(ex, gw::dsl::list_registry(), q);
            return r.program.value_or(DslProgram{"L", {-1}});
        };
    };
    timed("cluster by type", clustering("cluster_by_type.json"), DslProgram{"L", {gw::dsl::kHead}});
    timed("cluster by id", clustering("cluster_by_id.json"), DslProgram{"L", {gw::dsl::kRest, gw::dsl::kHead}});
}

// 2 --------------------------------------------------------------------
void translation_outputs(Check& c) {
    using namespace gw::interop;
    Translator tr;
    tr.learn_translation(fixtures::paho_to_gmqtt_examples(), Dialect::Paho, Dialect::Gmqtt);
    tr.learn_translation(fixtures::gmqtt_to_paho_examples(), Dialect::Gmqtt, Dialect::Paho);
    Value seq = tr.translate(render(fixtures::paho_publish(), Dialect::Paho), Dialect::Paho, Dialect::Gmqtt);
    Value rec = tr.translate(render(fixtures::gmqtt_publish(), Dialect::Gmqtt), Dialect::Gmqtt, Dialect::Paho);
    c.expect(seq == fixtures::paho_to_gmqtt_expected(), "ordered-sequence output: " + repr(seq));
    c.expect(repr(seq) == fixtures::kPahoToGmqttRepr, "ordered-sequence repr");
    c.expect(rec == fixtures::gmqtt_to_paho_expected(), "keyed-record output: " + repr(rec));
    c.expect(repr(rec) == fixtures::kGmqttToPahoRepr, "keyed-record repr");
    c.detail << "both outputs equal field for field";
}

// 3 --------------------------------------------------------------------
void logic_scenarios(Check& c) {
    using namespace gw::logic;
    const SensorKey pos{"phone", "pos"}, temp{"living_room", "temp"};
    Rule heater = learn_rule({1000, 0, 17, 21}, default_actuators(), Direction::Less, pos, temp);
    Rule cooler = learn_rule({1000, 0, 25, 21}, default_actuators(), Direction::Greater, pos, temp);
    c.expect(repr(heater) == "((1), 0.004, (1000, '>'), (21, '<'))", "heater " + repr(heater));
    c.expect(repr(cooler) == "((3), 0.004, (1000, '>'), (21, '>'))", "cooler " + repr(cooler));
    c.expect(std::fabs(heater.slope - 0.004) < 1e-12 && std::fabs(cooler.slope - 0.004) < 1e-12, "slope");

    std::vector<Rule> rules{heater, cooler};
    auto eval = [&](double p, double t) { return repr(evaluate_rules(rules, {{pos, p}, {temp, t}})); };
    c.expect(eval(1500, 19) == "{'heater': False, 'cooler': False}", "far away: " + eval(1500, 19));
    c.expect(eval(400, 19) == "{'heater': True, 'cooler': False}", "close and cold: " + eval(400, 19));
    c.expect(eval(0, 23) == "{'heater': False, 'cooler': True}", "home and warm: " + eval(0, 23));
    c.detail << repr(heater) << " " << repr(cooler);
}

// 4 --------------------------------------------------------------------
void context_aggregates(Check& c) {
    using namespace gw::context;
    Context c1 = Context::from_members("c1", "loc", {fixtures::sensor1_c1()});
    c1.add(fixtures::sensor101());
    auto t = c1.aggregate_of("temp");
    c.expect(t.has_value(), "temp aggregate present");
    if (!t) return;
    double mean = std::get<double>(t->representative);
    c.expect(t->count == 2, "count " + std::to_string(t->count));
    c.expect(std::fabs(t->std - 3.05) < 1e-9, "std " + std::to_string(t->std));
    c.expect(std::fabs(mean - 23.35) < 1e-9, "mean " + std::to_string(mean));
    c.detail << "count 2 std " << t->std << " mean " << mean << "; ";

    // brute-force recomputation, long double two-pass
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> val(-40, 60);
    std::uniform_int_distribution<int> len(1, 40);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> xs{val(rng)};
        Context ctx = Context::from_members("c", "temp", {{"s0", {{"temp", xs[0]}}}});
        int n = len(rng);
        for (int i = 1; i < n; ++i) {
            xs.push_back(val(rng));
            ctx.add({"s" + std::to_string(i), {{"temp", xs.back()}}});
        }
        long double m = 0;
        for (double x : xs) m += x;
        m /= xs.size();
        long double v = 0;
        for (double x : xs) v += (x - m) * (x - m);
        long double sd = std::sqrt(v / xs.size());
        auto a = ctx.aggregate_of("temp");
        worst = std::max({worst, std::fabs(double(std::get<double>(a->representative) - m)),
                          std::fabs(double(a->std - sd))});
        c.expect(a->count == xs.size(), "count on trial " + std::to_string(trial));
    }
    c.expect(worst < 1e-9, "max deviation " + std::to_string(worst));
    c.detail << "1000 random sequences, max deviation " << worst;
}

// 5 --------------------------------------------------------------------
void converter(Check& c) {
    using namespace gw::data;
    const std::string decl = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    const std::pair<const char*, const char*> rows[] = {
        {"<e/>", R"({"e": null})"},
        {"<e>text</e>", R"({"e": "text"})"},
        {"<e name=\"value\"/>", R"({"e": {"@name": "value"}})"},
        {"<e name=\"value\">text</e>", R"({"e": {"@name": "value", "#text": "text"}})"},
        {"<e><a>text</a><b>text</b></e>", R"({"e": {"a": "text", "b": "text"}})"},
        {"<e><a>text</a><a>text</a></e>", R"({"e": {"a": ["text", "text"]}})"},
        {"<e>text<a>text</a></e>", R"({"e": {"#text": "text", "a": "text"}})"},
    };
    int exact = 0;
    for (const auto& [xml, json] : rows) {
        bool ok = xml_to_json(xml) == json && json_to_xml(json) == decl + xml;
        c.expect(ok, std::string("row ") + xml);
        exact += ok;
    }
    std::mt19937_64 rng(50);
    int round_trips = 0;
    for (int i = 0; i < 50; ++i) {
        auto xml = fixtures::random_xml(rng);
        auto json = xml_to_json(xml);
        bool ok = same_structure(parse_xml(xml), parse_json(json)) && xml_to_json(json_to_xml(json)) == json;
        c.expect(ok, "round trip of document " + std::to_string(i));
        round_trips += ok;
    }
    auto nested = [](std::size_t d) {
        std::string s;
        for (std::size_t i = 0; i < d; ++i) s += "<n>";
        for (std::size_t i = 0; i < d; ++i) s += "</n>";
        return s;
    };
    bool deep_ok = false, deeper_raises = false;
    try {
        deep_ok = parse_xml(nested(1000)).depth() == 1000;
    } catch (const std::exception&) {
    }
    try {
        parse_xml(nested(1001));
    } catch (const DepthExceeded&) {
        deeper_raises = true;
    }
    c.expect(deep_ok, "depth 1000 parses");
    c.expect(deeper_raises, "depth 1001 raises DepthExceeded");
    c.detail << exact << "/7 rows, " << round_trips << "/50 round trips, depth guard "
             << (deep_ok && deeper_raises ? "exact" : "wrong");
}

// 6 --------------------------------------------------------------------
void spearman_tables(Check& c) {
    std::vector<double> depth{2, 2, 3, 10, 10}, depth_time{13, 59, 100, 154, 408};
    std::vector<double> lines{32, 206, 304, 25, 57}, lines_time{34, 47, 58, 14, 18};
    double r1 = gw::daemon::spearman(depth, depth_time);
    double r2 = gw::daemon::spearman(lines, lines_time);
    c.expect(std::fabs(r1 - 0.949) <= 0.001, "depth rho " + std::to_string(r1));
    c.expect(std::fabs(r2 - 0.900) <= 0.001, "lines rho " + std::to_string(r2));
    c.detail << std::fixed << std::setprecision(4) << "rho(depth, time) " << r1 << ", rho(lines, time) " << r2;
}

// 7 --------------------------------------------------------------------
void rank_cost(Check& c) {
    using namespace gw::adapter;
    const std::int64_t cost = 350000;
    ProtocolRanking ranking;
    for (int i = 1; i < 10; ++i) {
        ranking.add({"p" + std::to_string(i), -1, 0, RetryPolicy{0.5, 1},
                     std::make_shared<SimulatedConnector>("p" + std::to_string(i), false, Micros(cost))});
    }
    ranking.add({"target", -1, 0, RetryPolicy{0.5, 1}, std::make_shared<SimulatedConnector>("target", true, Micros(cost))});
    auto res = connect_ranked(ranking, {"127.0.0.1", 1});
    c.expect(res.rank == 10, "rank " + std::to_string(res.rank));
    c.expect(res.elapsed_us == 3500000, "elapsed " + std::to_string(res.elapsed_us) + " us");
    c.expect(rank_cost_us(10, cost, cost) == 3500000, "model");
    c.detail << "rank " << res.rank << " elapsed " << std::fixed << std::setprecision(6) << res.elapsed_us / 1e6
             << " s";
}

// 8 --------------------------------------------------------------------
void failure_simulation(Check& c) {
    using namespace gw::daemon;
    for (auto [proto, rate] : {std::pair<const char*, double>{"coap", 0.005}, {"mqtt", 0.025}}) {
        SimulationParams p;
        p.protocol = proto;
        p.trials = 1000;
        p.policy = gw::adapter::RetryPolicy{0.5, 1};
        p.failure_rate = rate;
        p.seed = 2018;
        auto n = simulate_connections(p).protocols.at(proto).complete_failures;
        auto again = simulate_connections(p).protocols.at(proto).complete_failures;
        auto [lo, hi] = gw_test::binomial_interval(1000, rate, 0.99);
        c.expect(n >= lo && n <= hi, std::string(proto) + " count " + std::to_string(n));
        c.expect(n == again, std::string(proto) + " not deterministic");
        c.detail << proto << " " << n << " in [" << lo << ", " << hi << "]; ";
    }
    bool dominated = true;
    for (double rate : {0.005, 0.025, 0.3, 0.9}) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            SimulationParams p;
            p.trials = 100000;
            p.policy = gw::adapter::RetryPolicy{0.5, 2};
            p.failure_rate = rate;
            p.seed = seed;
            auto s = simulate_connections(p).protocols.at(p.protocol);
            dominated = dominated && s.complete_failures <= s.first_attempt_failures;
        }
    }
    c.expect(dominated, "two-attempt dominance");
    c.detail << "dominance holds over 12 runs of 1e5 trials";
}

// 9 --------------------------------------------------------------------
void end_to_end(Check& c) {
    using namespace gw::daemon;
    auto dir = fs::temp_directory_path() / ("gw_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    {
        std::ofstream(dir / "clustering.prog") << "L: 1\n";
    }
    auto cfg = parse_config("[gateway]\narchive_dir = archive\nclustering_program = clustering.prog\n"
                            "[harness]\nenabled = true\nseed = 9\n",
                            dir);
    {
        Gateway g(cfg);
        g.start();
        bool linked = g.wait_for_sessions(2, 5000ms) && g.harness_broker()->wait_for_subscriptions(1, 5000ms);
        c.expect(linked, "harness links");
        const char* kinds[] = {"temp", "humidity", "light", "motion", "pressure", "co2"};
        const std::size_t n = 100;
        for (std::size_t i = 0; i < n; ++i) {
            std::string topic = "site" + std::to_string(i % 4) + "/" + kinds[i % 6] + "/" + std::to_string(i);
            g.harness_broker()->publish(topic, std::to_string(20 + i % 7), 1);
        }
        auto end = Clock::now() + 10s;
        while (Clock::now() < end && g.device_manager().size() < n) std::this_thread::sleep_for(10ms);
        g.settle(5000ms);
        std::this_thread::sleep_for(100ms);

        std::size_t table = 0;
        for (auto& s : g.sessions()) {
            if (s->protocol() == "mqtt") table = s->table().size();
        }
        auto snap = g.device_manager().snapshot();
        std::size_t partition = 0;
        for (const auto& [cluster, members] : snap) partition += members.size();
        auto stats = g.stats();

        c.expect(stats.sa_created == n, "SAs " + std::to_string(stats.sa_created));
        c.expect(g.device_manager().size() == n, "device manager holds " + std::to_string(g.device_manager().size()));
        c.expect(table == n, "dispatch table " + std::to_string(table));
        c.expect(partition == n, "partition " + std::to_string(partition));
        c.expect(stats.dropped == 0, "dropped " + std::to_string(stats.dropped));
        c.expect(stats.received == n && stats.classification_requests == n,
                 "received " + std::to_string(stats.received));
        c.detail << stats.sa_created << " SAs, table " << table << ", " << snap.size() << " clusters summing to "
                 << partition << ", dropped " << stats.dropped;
        g.stop();
    }
    fs::remove_all(dir);
}

// 10 -------------------------------------------------------------------
void q_learning(Check& c) {
    using namespace gw::dsl;
    int tasks = 0;
    for (const char* file : {"cluster_by_type.json", "cluster_by_id.json"}) {
        auto ex = load_list_examples(std::string(GW_FIXTURE_DIR) + "/" + file);
        QTable q;
        std::map<int, double> before;
        for (const auto& f : list_registry().functions()) before[f.index] = q.q("L", f.index);
        auto first = synthesize_and_learn<ListValue>(ex, list_registry(), q, {}, 1.0);
        c.expect(first.found(), std::string("found ") + file);
        if (!first.found()) continue;
        for (int f : first.program->stages) {
            c.expect(q.q("L", f) > before[f], std::string("q of ") + std::to_string(f) + " in " + file);
        }
        auto second = synthesize<ListValue>(ex, list_registry(), q);
        c.expect(second.candidates_visited <= first.candidates_visited, std::string("repeat visits ") + file);
        c.detail << file << " " << first.candidates_visited << " -> " << second.candidates_visited << "; ";
        ++tasks;
    }
    std::mt19937 rng(10);
    for (int t = 0; t < 30; ++t) {
        std::uniform_int_distribution<int> len(1, 6), val(-5, 20), pick(0, 2);
        int target = pick(rng);
        std::vector<IoExample<ListValue>> ex;
        for (int i = 0; i < 3; ++i) {
            std::vector<std::int64_t> xs(len(rng));
            for (auto& x : xs) x = val(rng);
            ListValue out = target == 0 ? ListValue(xs.front())
                          : target == 1 ? ListValue(xs.back())
                                        : ListValue(static_cast<std::int64_t>(xs.size()));
            ex.push_back({{xs}, out});
        }
        QTable q;
        auto first = synthesize_and_learn<ListValue>(ex, list_registry(), q, {3}, 1.0);
        if (!first.found()) continue;
        for (int f : first.program->stages) c.expect(q.q("L", f) > q.initial_q(), "q increase on random task");
        auto second = synthesize<ListValue>(ex, list_registry(), q, {3});
        c.expect(second.candidates_visited <= first.candidates_visited, "repeat visits on random task");
        ++tasks;
    }
    c.detail << tasks << " tasks";
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
        {"synthesis fixtures reproduce the expected pipelines under 10 s", synthesis_fixtures},
        {"translation outputs match field for field", translation_outputs},
        {"logic rules and witness evaluations", logic_scenarios},
        {"context aggregates (std 3.05, mean 23.35, brute force to 1e-9)", context_aggregates},
        {"converter mapping rows, 50-document round trip, depth 1000/1001", converter},
        {"spearman 0.949 and 0.900 within 0.001", spearman_tables},
        {"rank 10 at 0.35 s costs exactly 3.5 s", rank_cost},
        {"failure counts inside the exact 99% binomial interval, dominance", failure_simulation},
        {"100 novel topics give 100 SAs exactly once", end_to_end},
        {"Q-learning raises winning q and never slows a repeat", q_learning},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail << "exception: " << e.what();
        }
        failed += !c.ok;
        std::cout << (c.ok ? "PASS" : "FAIL") << " " << std::setw(2) << i + 1 << " " << criteria[i].first << " | "
                  << c.detail.str() << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
