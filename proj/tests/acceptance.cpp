// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "hearthguard/analytics.hpp"
#include "hearthguard/gamescore.hpp"
#include "hearthguard/locator.hpp"
#include "hearthguard/meshbus.hpp"
#include "hearthguard/runtime.hpp"
#include "oracles.hpp"
#include "test_support.hpp"
#include "topic_cases.hpp"

using namespace hearthguard;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Collects failed conditions for one criterion.
struct Check {
    std::vector<std::string> failures;
    std::vector<std::string> notes;

    bool expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
        return ok;
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

int run_criterion(const std::string& name, double limit_seconds, const std::function<void(Check&)>& body) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_seconds > 0 && secs >= limit_seconds)
        c.failures.push_back("runtime " + fmt(secs) + " s >= " + fmt(limit_seconds) + " s");
    const bool pass = c.failures.empty();
    std::cout << (pass ? "PASS " : "FAIL ") << name << " [" << fmt(secs, 3) << " s]";
    for (const auto& n : c.notes) std::cout << " " << n;
    std::cout << '\n';
    for (const auto& f : c.failures) std::cout << "    - " << f << '\n';
    std::cout.flush();
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------- fuzzy rules

fuzzy::CrispInputSnapshot quiet_snapshot() {
    fuzzy::CrispInputSnapshot s;
    s.set("time", 22.5);
    s.set("gas", false);
    s.set("flame", false);
    s.set("distance.refrigerator", 5.0);
    s.set("distance.wardrobe", 5.0);
    s.set("movement", 8.0);
    s.set("game_score", 0.0);
    s.set("temperature", 21.0);
    s.set("humidity", 50.0);
    return s;
}

void rule_table(Check& c) {
    const auto& base = test::default_rules();
    struct Golden {
        std::string rule, var;
        double value;
        std::optional<int> voice, image;
        std::optional<bool> relay, reminder, game;
    };
    const std::vector<Golden> table{
        {"R1", "time", 19.0, {}, {}, {}, {}, true},
        {"R2", "time", 10.0, 1, 1, {}, {}, {}},
        {"R3", "gas", 1.0, 2, {}, true, {}, {}},
        {"R4", "distance.refrigerator", 0.3, 3, 2, {}, {}, {}},
        {"R5", "distance.wardrobe", 0.3, 4, 3, {}, {}, {}},
        {"R6", "time", 13.0, 5, 4, {}, {}, {}},
        {"R7", "movement", 2.0, 6, {}, {}, {}, {}},
        {"R8", "game_score", 97.0, {}, {}, {}, false, {}},
    };
    const auto quiet = fuzzy::decide(base, quiet_snapshot());
    c.expect(quiet.firedRules.empty(), "baseline snapshot fires a rule");
    for (const auto& g : table) {
        auto s = quiet_snapshot();
        s.set(g.var, g.value);
        const auto d = fuzzy::decide(base, s);
        c.expect(d.firedRules.size() == 1 && d.firedRules[0].id == g.rule, g.rule + ": not the only fired rule");
        c.expect(d.voiceMessageId == g.voice, g.rule + ": voice");
        c.expect(d.imageMessageId == g.image, g.rule + ": image");
        c.expect(d.relayStatus == g.relay, g.rule + ": relay");
        c.expect(d.reminderEnabled == g.reminder, g.rule + ": reminder");
        c.expect(d.gameStart == g.game, g.rule + ": game");
    }
    c.note("rules=" + std::to_string(table.size()));
}

// ---------------------------------------------------------------- table 6

void table6(Check& c) {
    const auto suite = habitat::load_suite_file(test::data_path("scenarios/table6.json"));
    const auto rows = runtime::metrics_rows(runtime::run_suite(suite, test::default_rules()));
    if (!c.expect(rows.size() == 4, "expected 4 runs")) return;
    const std::array<std::vector<int>, 4> voice{{{13}, {}, {}, {13}}};
    const std::array<std::vector<int>, 4> image{{{16}, {17}, {18}, {19}}};
    const std::array<double, 4> hours{1.15, 5.30, 5.25, 3.40};
    std::string got;
    for (std::size_t i = 0; i < 4; ++i) {
        const std::string run = "run " + std::to_string(i + 1);
        c.expect(rows[i].voiceIds == voice[i], run + ": voice IDs");
        c.expect(rows[i].imageIds == image[i], run + ": image IDs");
        c.expect(std::abs(rows[i].movementHours - hours[i]) <= 0.02,
                 run + ": movement " + fmt(rows[i].movementHours) + " h");
        got += (i ? "/" : "") + fmt(rows[i].movementHours, 3);
    }
    c.note("movementHours=" + got);
}

// ---------------------------------------------------------------- locator

void multilateration(Check& c) {
    const auto anchors = locator::default_anchors();
    std::vector<oracle::Anchor3> oa;
    for (const auto& a : anchors.anchors) oa.push_back({a.position.x, a.position.y, a.position.z});

    std::mt19937_64 rng(20240);
    std::uniform_real_distribution<double> ux(0.0, anchors.room.size.x), uy(0.0, anchors.room.size.y);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const locator::Position truth{ux(rng), uy(rng), 1.2};
        const auto r = locator::solve_position(locator::simulate_ranges(truth, anchors, 0.0, rng), anchors);
        worst = std::max(worst, locator::distance(r.position, truth));
    }
    c.expect(worst < 1e-6, "noiseless error " + fmt(worst) + " m");

    // Noisy trials: the solver must land on the forward-model minimum, and the
    // RMSE is computed from the oracle's minimizer as well.
    const locator::Position truth{4.25, 2.3, 1.2};
    double sq = 0.0, sq_oracle = 0.0, gap = 0.0;
    const int trials = 1000;
    for (int i = 0; i < trials; ++i) {
        const auto ranges = locator::simulate_ranges(truth, anchors, 0.1, rng);
        const auto r = locator::solve_position(ranges, anchors);
        std::vector<double> rv;
        for (const auto& x : ranges) rv.push_back(x.range);
        const auto g = oracle::grid_minimize_xy(oa, rv, 1.2, -2.0, anchors.room.size.x + 2.0, -2.0,
                                                anchors.room.size.y + 2.0);
        sq += std::pow(r.position.x - truth.x, 2) + std::pow(r.position.y - truth.y, 2);
        sq_oracle += std::pow(g.x - truth.x, 2) + std::pow(g.y - truth.y, 2);
        gap = std::max(gap, std::hypot(r.position.x - g.x, r.position.y - g.y));
    }
    const double rmse = std::sqrt(sq / trials), rmse_oracle = std::sqrt(sq_oracle / trials);
    c.expect(rmse < 0.25, "RMSE " + fmt(rmse) + " m");
    c.expect(rmse_oracle < 0.25, "oracle RMSE " + fmt(rmse_oracle) + " m");
    c.expect(gap < 1e-3, "solver and oracle disagree by " + fmt(gap) + " m");
    c.note("noiseless_max=" + fmt(worst, 3) + " rmse=" + fmt(rmse) + " oracle_rmse=" + fmt(rmse_oracle));
}

void ds_twr(Check& c) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<long> tau_d(1, 1L << 20), reply_d(1L << 25, 1L << 30);
    double worst_rel = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double tau = std::ldexp(static_cast<double>(tau_d(rng)), -53);
        const double r = std::ldexp(static_cast<double>(reply_d(rng)), -40);
        const locator::TwrExchange ex{r + 2 * tau, r, r + 2 * tau, r, 0, 0};
        worst_rel = std::max(worst_rel, std::abs(locator::ds_twr_time_of_flight(ex) - tau) / tau);
    }
    c.expect(worst_rel <= 1e-12, "symmetric identity relative error " + fmt(worst_rel));

    const double range = 5.0, tof = range / locator::kSpeedOfLight;
    const double at20 = locator::ds_twr_range(locator::make_exchange(tof, 1e-3, 1e-3, 20e-6, 0.0));
    c.expect(std::abs(at20 - range) < 0.10, "20 ppm error " + fmt(std::abs(at20 - range)) + " m");

    double worst_dev = 0.0;
    for (int ppm = -40; ppm <= 40; ++ppm) {
        const double dt = ppm * 1e-6;
        const double got = locator::ds_twr_range(locator::make_exchange(tof, 1e-3, 1e-3, dt, 0.0));
        const double want = static_cast<double>(oracle::twr_range(range, 1e-3, 1e-3, dt, 0.0));
        worst_dev = std::max(worst_dev, std::abs(got - want));
        if (std::abs(ppm) <= 20) c.expect(std::abs(want - range) < 0.10, "oracle error at " + std::to_string(ppm) + " ppm");
    }
    c.expect(worst_dev < 1e-6, "deviation from the clock oracle " + fmt(worst_dev) + " m");
    c.note("identity_rel=" + fmt(worst_rel, 3) + " err20ppm=" + fmt(std::abs(at20 - range), 3) + "m");
}

// ---------------------------------------------------------------- statistics

void statistics(Check& c) {
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<std::size_t> nd(3, 20);
    std::uniform_real_distribution<double> u(-50, 50);
    std::uniform_int_distribution<int> k(0, 5);
    auto draw = [&](std::size_t n, bool ties) {
        std::vector<double> v(n);
        for (auto& x : v) x = ties ? k(rng) : u(rng);
        return v;
    };
    auto close = [](double got, long double want) {
        return std::abs(got - static_cast<double>(want)) <= std::max(1e-12 * std::abs(static_cast<double>(want)), 1e-15);
    };
    int compared = 0;
    for (int i = 0; i < 2000; ++i) {
        const bool ties = i % 2;
        const auto x = draw(nd(rng), ties), y = draw(x.size(), ties);
        try {
            c.expect(close(analytics::pearson(x, y), oracle::pearson(x, y)), "pearson draw " + std::to_string(i));
            c.expect(close(analytics::spearman(x, y), oracle::spearman(x, y)), "spearman draw " + std::to_string(i));
            ++compared;
        } catch (const ZeroVariance&) {
        }
        const auto a = draw(nd(rng), false), b = draw(nd(rng), false);
        const auto ma = oracle::moments(a), mb = oracle::moments(b);
        const auto w = analytics::t_test(a, b, analytics::TTestVariant::welch);
        const auto p = analytics::t_test(a, b, analytics::TTestVariant::pooled);
        c.expect(close(w.t, oracle::welch_t(ma.n, ma.mean, ma.var, mb.n, mb.mean, mb.var)), "welch t draw " + std::to_string(i));
        c.expect(close(w.df, oracle::welch_df(ma.n, ma.var, mb.n, mb.var)), "welch df draw " + std::to_string(i));
        c.expect(close(p.t, oracle::pooled_t(ma.n, ma.mean, ma.var, mb.n, mb.mean, mb.var)), "pooled t draw " + std::to_string(i));
    }
    if (c.failures.size() > 5) c.failures.resize(5);

    const analytics::GroupSummary a{26, 4.21, 0.70};
    std::string ts;
    for (double sd : {0.83, 0.893}) {
        const double t = analytics::t_test_from_summary(a, {11, 2.09, sd}).t;
        c.expect(t >= 6.2 && t <= 8.2, "score t " + fmt(t) + " with sd " + fmt(sd));
        ts += " t(sd=" + fmt(sd) + ")=" + fmt(t);
    }
    const double dur = analytics::t_test_from_summary({26, 3.35, 1.9}, {11, 5.13, 2.03}).t;
    c.expect(dur >= -3.0 && dur <= -1.8, "duration t " + fmt(dur));
    c.note("oracle_draws=" + std::to_string(compared) + ts + " t(duration)=" + fmt(dur));
}

// ---------------------------------------------------------------- mode switch

habitat::Scenario switch_scenario() {
    json suite = json::parse(std::ifstream(test::data_path("scenarios/fig9.json")));
    json doc = suite["defaults"];
    doc["name"] = "mode-switch";
    doc["durationSeconds"] = 480;
    // Two identical tours; the score rises between them.
    json trajectory = doc["trajectory"];
    for (const auto& w : suite["defaults"]["trajectory"]) {
        json late = w;
        late["t"] = w["t"].get<double>() + 240.0;
        trajectory.push_back(late);
    }
    doc["trajectory"] = trajectory;
    doc["events"] = json::array({
        {{"t", 0}, {"kind", "gameScore"}, {"score100", 55}},
        {{"t", 180}, {"kind", "gameScore"}, {"score100", 97}},
        {{"t", 300}, {"kind", "sensor"}, {"device", "gas-1"}, {"value", true}},
        {{"t", 330}, {"kind", "sensor"}, {"device", "gas-1"}, {"value", false}},
    });
    return habitat::load_scenario(doc, test::data_path("scenarios"));
}

struct LoggedFrame {
    double t;
    bool dropped;
    meshbus::Frame frame;
};

std::vector<LoggedFrame> parse_log(const std::string& text) {
    std::vector<LoggedFrame> out;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        const json j = json::parse(line);
        out.push_back({j["t"].get<double>(), j["dropped"].get<bool>(), meshbus::frame_from_json(j["frame"])});
    }
    return out;
}

void mode_switch(Check& c) {
    const auto scenario = switch_scenario();
    std::ostringstream log;
    log << runtime::frame_log_header("mode-switch", conductor::ModePolicy::adaptive, std::nullopt).dump() << '\n';
    runtime::RunOptions opt;
    opt.policy = conductor::ModePolicy::adaptive;
    opt.frameLog = &log;
    std::vector<std::size_t> counts;
    std::optional<double> switched;
    opt.onTick = [&](const conductor::Conductor& brain, const habitat::Habitat&, double t) {
        const auto n = brain.registry().active_count();
        if (counts.empty() || counts.back() != n) {
            counts.push_back(n);
            if (n == 14 && !switched) switched = t;
        }
    };
    const auto result = runtime::run_scenario(scenario, test::default_rules(), opt);
    c.expect(counts == std::vector<std::size_t>{22, 14}, "active device count did not go 22 -> 14 once");
    if (!c.expect(switched.has_value(), "no switch")) return;

    const auto frames = parse_log(log.str());
    std::set<std::string> deactivated;
    int before = 0, after = 0, alerts_after = 0, from_off = 0;
    for (const auto& f : frames) {
        const std::string& topic = *f.frame.topic;
        if (topic.starts_with("sys/device/") && f.frame.payload == json{{"active", false}}) {
            c.expect(!f.dropped && f.frame.retain, topic + " not delivered retained");
            deactivated.insert(topic.substr(11, topic.size() - 11 - 7));
        }
        if (f.dropped) continue;
        const bool reminder = topic == "care/reminder" && f.frame.payload.contains("rule");
        if (reminder) (f.t < *switched ? before : after)++;
        if (topic.starts_with("alert/") && f.t > *switched) ++alerts_after;
        if (f.t > *switched && topic.starts_with("home/") &&
            (topic.ends_with("/temperature") || topic.ends_with("/humidity")))
            ++from_off;
    }
    c.expect(result.finalActiveDevices == 14, "final active devices " + std::to_string(result.finalActiveDevices));
    c.expect(deactivated.size() == 8, std::to_string(deactivated.size()) + " sys/device deactivation frames");
    for (const auto& id : deactivated) {
        const auto* d = scenario.device(id);
        c.expect(d && !d->essential, id + " is essential or unknown");
    }
    c.expect(before > 0, "no reminders before the switch");
    c.expect(after == 0, std::to_string(after) + " reminders after the switch");
    c.expect(alerts_after > 0, "no alerts after the switch");
    c.expect(from_off == 0, std::to_string(from_off) + " frames from deactivated sensors");

    // Same workload without the score rise keeps reminding during the second tour.
    auto steady = scenario;
    std::erase_if(steady.events, [](const habitat::ScenarioEvent& e) {
        return e.kind == habitat::EventKind::gameScore && e.payload.value("score100", 0) == 97;
    });
    const auto control = runtime::run_scenario(steady, test::default_rules(), opt);
    c.expect(control.metrics.reminderCount > before, "control run shows no second-tour reminders");

    c.note("switch_t=" + fmt(*switched) + " devices=22->14 reminders_before=" + std::to_string(before) +
           " after=" + std::to_string(after) + " alerts_after=" + std::to_string(alerts_after));
}

// ---------------------------------------------------------------- fig 9

void fig9(Check& c) {
    const auto suite = habitat::load_suite_file(test::data_path("scenarios/fig9.json"));
    std::map<conductor::ModePolicy, std::vector<runtime::RunResult>> by;
    for (auto p : {conductor::ModePolicy::automated, conductor::ModePolicy::semiAutomated, conductor::ModePolicy::adaptive}) {
        runtime::RunOptions opt;
        opt.policy = p;
        by[p] = runtime::run_suite(suite, test::default_rules(), opt);
    }
    std::string summary;
    for (const auto& [policy, runs] : by) {
        std::string seq;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const long total = runs[i].metrics.reminderCount + runs[i].metrics.alarmCount;
            seq += (i ? "," : "") + std::to_string(total);
            if (i > 0) {
                c.expect(runs[i].log.gameScore >= runs[i - 1].log.gameScore, "scores not ascending");
                const long prev = runs[i - 1].metrics.reminderCount + runs[i - 1].metrics.alarmCount;
                c.expect(total <= prev, std::string(conductor::to_string(policy)) + ": messages rise at run " +
                                            std::to_string(i + 1));
            }
        }
        summary += std::string(" ") + conductor::to_string(policy) + "=" + seq;
    }
    const auto& a = by[conductor::ModePolicy::automated];
    const auto& s = by[conductor::ModePolicy::semiAutomated];
    c.expect(a.size() == 5 && s.size() == 5, "expected 5 scenarios");
    std::string drops;
    for (std::size_t i = 0; i < std::min(a.size(), s.size()); ++i) {
        c.expect(s[i].metrics.droppedMessages <= a[i].metrics.droppedMessages,
                 "dropped semi > automated on " + a[i].log.scenario);
        drops += (i ? "," : "") + std::to_string(s[i].metrics.droppedMessages) + "<=" +
                 std::to_string(a[i].metrics.droppedMessages);
    }
    c.note("messages:" + summary + " dropped=" + drops);
}

// ---------------------------------------------------------------- broker

void broker(Check& c) {
    int passed = 0;
    for (const auto& m : test::kMatchCases) {
        if (c.expect(meshbus::matches(m.filter, m.topic) == m.expected, std::string(m.filter) + " ~ " + m.topic))
            ++passed;
    }

    {
        meshbus::Broker b;
        meshbus::LocalClient pub(b, "pub");
        pub.publish("user/game/score", {{"score100", 55}}, true);
        pub.publish("user/game/score", {{"score100", 97}}, true);
        meshbus::LocalClient late(b, "late");
        late.subscribe("user/#");
        const auto got = late.drain();
        c.expect(got.size() == 1 && got[0].retain && got[0].payload["score100"] == 97, "retained late delivery");
    }

    {
        meshbus::Broker b;
        meshbus::LocalClient s1(b, "s1"), s2(b, "s2");
        s1.subscribe("load/#");
        s2.subscribe("load/+");
        constexpr int kPublishers = 4, kEach = 2500;
        std::vector<std::thread> threads;
        for (int p = 0; p < kPublishers; ++p)
            threads.emplace_back([&b, p] {
                meshbus::LocalClient cl(b, "p" + std::to_string(p));
                for (int i = 0; i < kEach; ++i) cl.publish("load/" + std::to_string(p), {{"p", p}, {"seq", i}});
            });
        for (auto& t : threads) t.join();
        for (auto* s : {&s1, &s2}) {
            const auto got = s->drain();
            bool ordered = got.size() == std::size_t{kPublishers * kEach};
            std::map<int, int> next;
            for (const auto& f : got) {
                const int p = f.payload["p"], seq = f.payload["seq"];
                ordered &= seq == next[p];
                next[p] = seq + 1;
            }
            c.expect(ordered, "per-client ordering under 10^4 publishes");
        }
    }

    {
        meshbus::Broker b(7);
        b.set_loss_model({0.0, 22, 22});
        meshbus::LocalClient pub(b, "pub"), sub(b, "sub");
        sub.subscribe("#");
        for (int i = 0; i < 10000; ++i) pub.publish("home/kitchen/temperature", i);
        c.expect(sub.drain().size() == 10000 && b.stats().dropped == 0, "loss at p0 = 0");
    }
    c.note("match_cases=" + std::to_string(passed) + "/" + std::to_string(test::kMatchCases.size()));
}

// ---------------------------------------------------------------- game score

void game_scoring(Check& c) {
    using namespace gamescore;
    GameSession s;
    s.seriesId = 1;
    s.tasks = {{1, 1, 0, 10}, {2, 0, 0, 12}, {3, 1, 0, 15}, {4, 1, 0, 18}, {5, 1, 0, 12}};
    s.totalSeconds = 162;
    const auto r = score_session(s);
    c.expect(r.points == 4 && r.totalSeconds == 162, "session total " + std::to_string(r.points));

    auto slow = s;
    slow.totalSeconds = 601;
    c.expect(finalize(slow).status == SessionStatus::timedOut, "601 s not timedOut");

    std::mt19937_64 rng(8080);
    std::uniform_real_distribution<double> total(60.0, 900.0), bump(0.0, 200.0);
    std::bernoulli_distribution coin(0.5);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        GameSession g;
        for (int k = 1; k <= 5; ++k) {
            const bool ok = coin(rng);
            g.tasks.push_back({k, ok ? 1 : 0, (!ok && records_wrong_answers(k)) ? 1 : 0, 5});
        }
        g.totalSeconds = total(rng);
        const auto base = score_session(g);
        auto slower = g;
        slower.totalSeconds += bump(rng);
        if (score_session(slower).score100 > base.score100) ++violations;
        for (const auto& t : g.tasks) {
            if (t.correct) continue;
            auto better = g;
            better.tasks[t.taskIndex - 1].correct = 1;
            better.tasks[t.taskIndex - 1].wrong = 0;
            if (score_session(better).score100 < base.score100) ++violations;
        }
    }
    c.expect(violations == 0, std::to_string(violations) + " monotonicity violations");
    c.note("points=" + std::to_string(r.points) + " total=" + fmt(r.totalSeconds) + " sessions=10000");
}

// ---------------------------------------------------------------- determinism

struct Invocation {
    int code = -1;
    std::string csv, frames;
};

Invocation invoke(const std::vector<std::string>& args, const fs::path& dir) {
    const auto csv = dir / "m.csv", frames = dir / "f.jsonl";
    std::vector<std::string> argv{HEARTHGUARD_CLI};
    argv.insert(argv.end(), args.begin(), args.end());
    for (const auto& s : {std::string("--metrics"), csv.string(), std::string("--frames"), frames.string()})
        argv.push_back(s);
    Invocation out;
    const pid_t pid = ::fork();
    if (pid == 0) {
        std::vector<char*> raw;
        for (auto& a : argv) raw.push_back(a.data());
        raw.push_back(nullptr);
        if (!std::freopen("/dev/null", "w", stderr)) ::_exit(126);
        ::execv(raw[0], raw.data());
        ::_exit(127);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string{std::istreambuf_iterator<char>(in), {}};
    };
    out.csv = slurp(csv);
    out.frames = slurp(frames);
    return out;
}

void determinism(Check& c) {
    const fs::path dir = fs::temp_directory_path() / ("hg-accept-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    int compared = 0;
    for (const std::string scenario : {"table6", "fig9"}) {
        for (const std::string mode : {"automated", "semiAutomated", "adaptive"}) {
            for (const std::string seed : {"7", "123456789"}) {
                const std::vector<std::string> args{"run", scenario, "--mode", mode, "--seed", seed};
                const auto a = invoke(args, dir);
                const auto b = invoke(args, dir);
                const std::string what = scenario + " " + mode + " seed " + seed;
                c.expect(a.code == 0 && b.code == 0, what + ": exit code");
                c.expect(!a.csv.empty() && a.csv == b.csv, what + ": metrics CSV differs");
                c.expect(!a.frames.empty() && a.frames == b.frames, what + ": frame log differs");
                ++compared;
            }
        }
    }
    fs::remove_all(dir);
    c.note("invocation_pairs=" + std::to_string(compared));
}

}  // namespace

int main() {
    int failed = 0;
    failed += run_criterion("rule-table-golden", 1.0, rule_table);
    failed += run_criterion("table6-replay", 10.0, table6);
    failed += run_criterion("multilateration-accuracy", 30.0, multilateration);
    failed += run_criterion("ds-twr", 0.0, ds_twr);
    failed += run_criterion("statistics", 0.0, statistics);
    failed += run_criterion("mode-switch", 0.0, mode_switch);
    failed += run_criterion("fig9-monotonicity", 0.0, fig9);
    failed += run_criterion("broker-conformance", 0.0, broker);
    failed += run_criterion("game-scoring", 0.0, game_scoring);
    failed += run_criterion("determinism", 0.0, determinism);
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << '\n';
    return failed == 0 ? 0 : 1;
}
