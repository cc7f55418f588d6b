#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hearthguard/analytics.hpp"
#include "hearthguard/fuzzy/rulebase_json.hpp"
#include "hearthguard/locator.hpp"
#include "hearthguard/meshbus.hpp"
#include "hearthguard/runtime.hpp"

namespace fs = std::filesystem;
namespace hg = hearthguard;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

fs::path data_dir() {
    if (const char* env = std::getenv("HEARTHGUARD_DATA_DIR")) return env;
    return HEARTHGUARD_DATA_DIR;
}

/// A path, or the name of a bundled scenario.
fs::path resolve_scenario(const std::string& arg) {
    fs::path p(arg);
    if (fs::exists(p)) return p;
    if (p.extension().empty() && p.parent_path().empty()) {
        fs::path bundled = data_dir() / "scenarios" / (arg + ".json");
        if (fs::exists(bundled)) return bundled;
    }
    throw hg::SchemaError("$", "cannot open scenario '" + arg + "'");
}

hg::fuzzy::RuleBase load_rules(const std::string& rules_file) {
    const std::string path = rules_file.empty() ? (data_dir() / "rules" / "default.json").string() : rules_file;
    auto base = hg::fuzzy::load_rule_base_file(path);
    if (const char* cfg = std::getenv("HEARTHGUARD_CONFIG"); cfg && *cfg)
        base = hg::fuzzy::apply_membership_config(base,
                                                  hg::fuzzy::parse_json_text(hg::fuzzy::read_text_file(cfg)));
    return base;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

// ------------------------------------------------------------------ run

struct RunArgs {
    std::string scenario;
    std::string mode = "adaptive";
    std::optional<std::uint64_t> seed;
    std::string metrics;
    std::string frames;
    std::string rules;
    std::string tcp;
    std::string ws;
    double pace = 0.0;
};

int cmd_run(const RunArgs& a) {
    const auto policy = hg::conductor::policy_from_string(a.mode);
    const auto suite = hg::habitat::load_suite_file(resolve_scenario(a.scenario));
    const auto base = load_rules(a.rules);

    std::ofstream frames;
    hg::runtime::RunOptions opt;
    opt.policy = *policy;
    opt.seed = a.seed;
    opt.pace = a.pace;
    opt.stop = &g_stop;
    if (!a.frames.empty()) {
        frames = open_out(a.frames);
        opt.frameLog = &frames;
    }

    std::unique_ptr<hg::meshbus::TcpServer> tcp;
    std::unique_ptr<hg::meshbus::WsServer> ws;
    if (!a.tcp.empty() || !a.ws.empty()) {
        opt.onBroker = [&](hg::meshbus::Broker& broker) {
            if (tcp) tcp->stop();
            if (ws) ws->stop();
            tcp.reset();
            ws.reset();
            if (!a.tcp.empty()) {
                tcp = std::make_unique<hg::meshbus::TcpServer>(broker, hg::meshbus::parse_endpoint(a.tcp));
                std::cerr << "tcp listening on port " << tcp->port() << std::endl;
            }
            if (!a.ws.empty()) {
                ws = std::make_unique<hg::meshbus::WsServer>(broker, hg::meshbus::parse_endpoint(a.ws));
                std::cerr << "ws listening on port " << ws->port() << std::endl;
            }
        };
    }

    const auto results = hg::runtime::run_suite(suite, base, opt);
    if (tcp) tcp->stop();
    if (ws) ws->stop();
    for (const auto& r : results)
        for (const auto& w : r.warnings) std::cerr << r.log.scenario << ": " << w << '\n';

    const auto rows = hg::runtime::metrics_rows(results);
    if (a.metrics.empty()) {
        hg::analytics::write_metrics_csv(std::cout, rows);
    } else {
        auto out = open_out(a.metrics);
        hg::analytics::write_metrics_csv(out, rows);
    }
    return kExitOk;
}

// ------------------------------------------------------------------ solve

std::vector<double> parse_ranges(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw CLI::ValidationError("--ranges", "'" + item + "' is not a number");
        out.push_back(v);
    }
    return out;
}

/// Anchors from a JSON array, or from the "anchors" (and "room") of an object.
hg::locator::AnchorSet load_anchors(const std::string& path) {
    const json doc = hg::fuzzy::parse_json_text(hg::fuzzy::read_text_file(path));
    json wrapper = doc.is_array() ? json{{"anchors", doc}} : doc;
    wrapper["durationSeconds"] = 1;
    for (const char* k : {"trajectory", "events", "devices", "ruleFiles", "ruleExtensions", "ruleEdits", "runs"})
        wrapper.erase(k);
    return hg::habitat::load_scenario(wrapper).anchors;
}

int cmd_solve(const std::string& anchors_file, const std::string& ranges_arg, const std::string& trace) {
    const auto anchors = load_anchors(anchors_file);
    const auto ranges = parse_ranges(ranges_arg);
    if (ranges.size() != anchors.anchors.size())
        throw CLI::ValidationError("--ranges", "expected " + std::to_string(anchors.anchors.size()) + " ranges");
    hg::locator::RangeSet set;
    for (std::size_t i = 0; i < ranges.size(); ++i) set.push_back({anchors.anchors[i].id, ranges[i], 0.0});
    const auto r = hg::locator::solve_position(set, anchors);
    using hg::analytics::format_number;
    std::cout << "x=" << format_number(r.position.x) << " y=" << format_number(r.position.y)
              << " z=" << format_number(r.position.z) << " residual=" << format_number(r.residualNorm)
              << " iterations=" << r.iterations << " converged=" << (r.converged ? "true" : "false")
              << " outsideRoom=" << (r.outsideRoom ? "true" : "false") << '\n';
    if (!trace.empty()) {
        auto out = open_out(trace);
        hg::locator::write_trace_header(out);
        hg::locator::write_trace_row(out, 0, r);
    }
    return kExitOk;
}

// ------------------------------------------------------------------ stats

struct StatsArgs {
    std::string csv;
    std::vector<std::string> pearson, spearman, ttest;
    bool welch = false;
    bool pooled = false;
};

int cmd_stats(const StatsArgs& a) {
    std::ifstream in(a.csv, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + a.csv + "'");
    const auto table = hg::analytics::read_csv(in);
    using hg::analytics::format_number;
    if (!a.pearson.empty()) {
        std::cout << "pearson=" << format_number(hg::analytics::pearson(table.numeric_column(a.pearson[0]),
                                                                        table.numeric_column(a.pearson[1])))
                  << '\n';
    } else if (!a.spearman.empty()) {
        std::cout << "spearman=" << format_number(hg::analytics::spearman(table.numeric_column(a.spearman[0]),
                                                                          table.numeric_column(a.spearman[1])))
                  << '\n';
    } else {
        const auto variant = a.pooled ? hg::analytics::TTestVariant::pooled : hg::analytics::TTestVariant::welch;
        const auto r = hg::analytics::t_test(table.numeric_column(a.ttest[0]), table.numeric_column(a.ttest[1]),
                                             variant);
        std::cout << "t=" << format_number(r.t) << " df=" << format_number(r.df)
                  << " p=" << format_number(r.pTwoSided) << '\n';
    }
    return kExitOk;
}

// ------------------------------------------------------------------ broker

int cmd_broker(const std::string& tcp_addr, const std::string& ws_addr, double loss, std::uint64_t seed) {
    hg::meshbus::Broker broker(seed);
    hg::meshbus::LossModel m;
    m.baseProbability = loss;
    m.activeDevices = m.maxDevices = 1;
    broker.set_loss_model(m);
    std::unique_ptr<hg::meshbus::TcpServer> tcp;
    std::unique_ptr<hg::meshbus::WsServer> ws;
    if (!tcp_addr.empty()) {
        tcp = std::make_unique<hg::meshbus::TcpServer>(broker, hg::meshbus::parse_endpoint(tcp_addr));
        std::cout << "tcp " << tcp->port() << std::endl;
    }
    if (!ws_addr.empty()) {
        ws = std::make_unique<hg::meshbus::WsServer>(broker, hg::meshbus::parse_endpoint(ws_addr));
        std::cout << "ws " << ws->port() << std::endl;
    }
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (tcp) tcp->stop();
    if (ws) ws->stop();
    const auto st = broker.stats();
    std::cout << "published=" << st.published << " dropped=" << st.dropped << " delivered=" << st.delivered
              << std::endl;
    return kExitOk;
}

// ------------------------------------------------------------------ replay

int cmd_replay(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    const auto summary = hg::runtime::replay_frame_log(in);
    std::cout << "suite=" << summary.header.value("suite", "") << " mode=" << summary.header.value("mode", "")
              << " runs=" << summary.runs.size() << '\n';
    for (const auto& r : summary.runs) {
        std::cout << "run=" << r.name << " frames=" << r.frames << " dropped=" << r.dropped
                  << " reminders=" << r.reminders << " alarms=" << r.alarms
                  << " voiceIds=" << hg::analytics::join_ids(r.voiceIds)
                  << " imageIds=" << hg::analytics::join_ids(r.imageIds) << '\n';
        for (const auto& [topic, n] : r.topics) std::cout << "  " << topic << ' ' << n << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hearthguard: assistive smart-home runtime and simulation harness"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Simulate a scenario (file or bundled name) and write metrics");
    run_cmd->add_option("scenario", run.scenario, "Scenario file, or bundled name (table6, fig9)")->required();
    run_cmd->add_option("--mode", run.mode, "Operating mode")
        ->check(CLI::IsMember({"auto", "semi", "adaptive", "automated", "semiAutomated"}));
    run_cmd->add_option("--seed", run.seed, "Seed for every run (default: scenario seed)");
    run_cmd->add_option("--metrics", run.metrics, "Metrics CSV output (default: stdout)");
    run_cmd->add_option("--frames", run.frames, "Frame log output (JSON lines)");
    run_cmd->add_option("--rules", run.rules, "Rule base file (default: bundled rules)");
    run_cmd->add_option("--tcp", run.tcp, "Expose the broker over TCP at host:port");
    run_cmd->add_option("--ws", run.ws, "Expose the broker over WebSocket at host:port");
    run_cmd->add_option("--pace", run.pace, "Wall-clock seconds per simulated second (0 = flat out)")
        ->check(CLI::NonNegativeNumber);

    std::string anchors_file, ranges_arg, trace;
    auto* solve_cmd = app.add_subcommand("solve", "Solve a position from anchor ranges");
    solve_cmd->add_option("--anchors", anchors_file, "Anchor JSON file")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--ranges", ranges_arg, "Comma-separated ranges in anchor order")->required();
    solve_cmd->add_option("--trace", trace, "Write the epoch CSV trace here");

    StatsArgs stats;
    auto* stats_cmd = app.add_subcommand("stats", "Correlation and t statistics over CSV columns");
    stats_cmd->add_option("--csv", stats.csv, "Input CSV with a header row")->required()->check(CLI::ExistingFile);
    auto* o_p = stats_cmd->add_option("--pearson", stats.pearson, "Pearson r of two columns")->expected(2);
    auto* o_s = stats_cmd->add_option("--spearman", stats.spearman, "Spearman rho of two columns")->expected(2);
    auto* o_t = stats_cmd->add_option("--ttest", stats.ttest, "Two-sample t-test of two columns")->expected(2);
    auto* f_w = stats_cmd->add_flag("--welch", stats.welch, "Welch t-test (default)");
    auto* f_pl = stats_cmd->add_flag("--pooled", stats.pooled, "Pooled-variance t-test");
    o_p->excludes(o_s)->excludes(o_t);
    o_s->excludes(o_t);
    f_w->excludes(f_pl)->needs(o_t);
    f_pl->needs(o_t);
    stats_cmd->require_option(1, 3);

    std::string tcp_addr, ws_addr;
    double loss = 0.0;
    std::uint64_t broker_seed = 0;
    auto* broker_cmd = app.add_subcommand("broker", "Run a standalone broker until interrupted");
    broker_cmd->add_option("--tcp", tcp_addr, "TCP listen address host:port");
    broker_cmd->add_option("--ws", ws_addr, "WebSocket listen address host:port");
    broker_cmd->add_option("--loss", loss, "Drop probability for telemetry topics")->check(CLI::Range(0.0, 1.0));
    broker_cmd->add_option("--seed", broker_seed, "Loss model seed");

    std::string log_path;
    auto* replay_cmd = app.add_subcommand("replay", "Summarize a frame log");
    replay_cmd->add_option("log", log_path, "Frame log written by run --frames")->required();

    try {
        app.parse(argc, argv);
        if (*stats_cmd && stats.pearson.empty() && stats.spearman.empty() && stats.ttest.empty())
            throw CLI::RequiredError("one of --pearson, --spearman, --ttest");
        if (*broker_cmd && tcp_addr.empty() && ws_addr.empty()) throw CLI::RequiredError("--tcp or --ws");
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    try {
        if (*run_cmd) return cmd_run(run);
        if (*solve_cmd) return cmd_solve(anchors_file, ranges_arg, trace);
        if (*stats_cmd) return cmd_stats(stats);
        if (*broker_cmd) return cmd_broker(tcp_addr, ws_addr, loss, broker_seed);
        if (*replay_cmd) return cmd_replay(log_path);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
