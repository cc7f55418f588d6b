#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hearthguard/conductor.hpp"
#include "hearthguard/runtime.hpp"
#include "test_support.hpp"

using namespace hearthguard;
using namespace hearthguard::conductor;
using nlohmann::json;

namespace {

// Independent reading of the score "high" term: Gaussian, center 95, sigma 10.
double high_oracle(double x) { return std::exp(-0.5 * std::pow((x - 95.0) / 10.0, 2)); }

/// Conductor wired to a broker with a probe that sees all traffic.
struct Rig {
    meshbus::Broker broker;
    fuzzy::RuleStore store;
    meshbus::LocalClient input{broker, "input"};
    meshbus::LocalClient probe{broker, "probe"};
    Conductor brain;
    std::vector<meshbus::Frame> out;
    double t = 0;

    explicit Rig(ConductorConfig cfg, fuzzy::RuleBase base = test::default_rules())
        : store(std::move(base)), brain(broker, store, std::move(cfg)) {
        probe.subscribe("care/reminder");
        probe.subscribe("alert/#");
        probe.subscribe("sys/#");
        probe.subscribe("home/+/relay/set");
    }

    void position(double x, double y) { input.publish("user/position", {{"t", t}, {"x", x}, {"y", y}, {"z", 1.2}}); }

    /// Advances one tick and returns the frames the conductor published.
    std::vector<meshbus::Frame> tick() {
        brain.tick(t);
        t += 1.0;
        auto got = probe.drain();
        out.insert(out.end(), got.begin(), got.end());
        return got;
    }

    static std::vector<meshbus::Frame> on(const std::vector<meshbus::Frame>& frames, const std::string& filter) {
        std::vector<meshbus::Frame> r;
        for (const auto& f : frames)
            if (meshbus::matches(filter, *f.topic)) r.push_back(f);
        return r;
    }
};

ConductorConfig config(ModePolicy policy = ModePolicy::automated, double startHour = 16.0) {
    ConductorConfig c;
    c.policy = policy;
    c.startHour = startHour;
    return c;
}

fuzzy::RuleBase table6_rules(int run = 0) {
    const auto suite = habitat::load_suite_file(test::data_path("scenarios/table6.json"));
    return habitat::scenario_rule_base(test::default_rules(), suite.runs[run]);
}

}  // namespace

// ------------------------------------------------------------ mode switch

TEST(ModeSwitch, HighScoreSelectsSemiAutomated) {
    const auto& base = test::default_rules();
    EXPECT_EQ(evaluate_mode_switch(base, 97, Mode::automated), Mode::semiAutomated);
    EXPECT_EQ(evaluate_mode_switch(base, 55, Mode::semiAutomated), Mode::automated);
    EXPECT_LT(high_oracle(55), 0.01);
    EXPECT_EQ(evaluate_mode_switch(base, 97, Mode::semiAutomated, Mode::automated), Mode::automated);
    EXPECT_EQ(evaluate_mode_switch(base, 10, Mode::automated, Mode::semiAutomated), Mode::semiAutomated);
}

TEST(ModeSwitch, ThresholdAgreesWithIndependentMembershipOverAllScores) {
    const auto& base = test::default_rules();
    for (int s = 0; s <= 100; ++s) {
        EXPECT_NEAR(score_high_degree(base, s), high_oracle(s), 1e-12) << s;
        const Mode want = high_oracle(s) >= 0.5 ? Mode::semiAutomated : Mode::automated;
        EXPECT_EQ(evaluate_mode_switch(base, s, Mode::automated), want) << s;
    }
}

TEST(ModeSwitch, HysteresisNeedsThreeConsecutivePublications) {
    const auto& base = test::default_rules();
    ModeController c;
    c.observe(base, 97);
    c.observe(base, 97);
    EXPECT_EQ(c.mode(), Mode::automated);
    c.observe(base, 97);
    EXPECT_EQ(c.mode(), Mode::semiAutomated);

    ModeController flap;
    for (int i = 0; i < 20; ++i) flap.observe(base, i % 3 == 2 ? 50 : 97);
    EXPECT_EQ(flap.mode(), Mode::automated);
}

TEST(ModeSwitch, OverrideWinsAndReleaseRestoresScoreMode) {
    const auto& base = test::default_rules();
    ModeController c;
    for (int i = 0; i < 3; ++i) c.observe(base, 97);
    c.set_override(Mode::automated);
    EXPECT_EQ(c.mode(), Mode::automated);
    c.observe(base, 99);
    EXPECT_EQ(c.mode(), Mode::automated);
    c.set_override(std::nullopt);
    EXPECT_EQ(c.mode(), Mode::semiAutomated);
}

// ------------------------------------------------------------ registry

TEST(Registry, AutomatedAll22SemiOnly14Essential) {
    const auto reg = make_registry(habitat::default_fleet());
    auto semi = apply_registry_mode(reg, Mode::semiAutomated);
    EXPECT_EQ(semi.registry.active_count(), 14u);
    EXPECT_EQ(semi.frames.size(), 8u);
    for (const auto& f : semi.frames) {
        EXPECT_TRUE(f.topic->starts_with("sys/device/"));
        EXPECT_TRUE(f.retain);
        EXPECT_EQ(f.payload, json({{"active", false}}));
        const auto id = std::string(meshbus::split_levels(*f.topic)[2]);
        EXPECT_FALSE(semi.registry.find(id)->essential);
    }
    auto back = apply_registry_mode(semi.registry, Mode::automated);
    EXPECT_EQ(back.registry.active_count(), 22u);
    EXPECT_EQ(back.frames.size(), 8u);
}

TEST(Registry, ReapplyingTheSameModeEmitsNothing) {
    const auto reg = make_registry(habitat::default_fleet());
    EXPECT_TRUE(apply_registry_mode(reg, Mode::automated).frames.empty());
    const auto semi = apply_registry_mode(reg, Mode::semiAutomated).registry;
    const auto again = apply_registry_mode(semi, Mode::semiAutomated);
    EXPECT_TRUE(again.frames.empty());
    EXPECT_EQ(again.registry, semi);
}

TEST(Registry, EssentialDevicesStayActiveUnderAnyModeSequence) {
    std::mt19937_64 rng(3);
    auto reg = make_registry(habitat::default_fleet());
    for (int i = 0; i < 200; ++i) {
        const Mode m = rng() % 2 ? Mode::automated : Mode::semiAutomated;
        reg = apply_registry_mode(reg, m).registry;
        for (const auto& d : reg.devices)
            if (d.essential) {
                ASSERT_TRUE(d.active) << d.id;
            }
        ASSERT_EQ(reg.active_count(), m == Mode::automated ? 22u : 14u);
    }
}

// ------------------------------------------------------------ tick

TEST(Tick, ZoneEntryPublishesItsImageOnAlertZone) {
    Rig rig(config());
    rig.position(4.25, 2.3);
    EXPECT_TRUE(Rig::on(rig.tick(), "alert/#").empty());
    rig.position(1.2, 1.3);  // inside zone 1
    const auto alerts = Rig::on(rig.tick(), "alert/zone");
    ASSERT_EQ(alerts.size(), 1u);
    EXPECT_EQ(alerts[0].payload["image"], 16);
    EXPECT_EQ(alerts[0].payload["zone"], 1);
    rig.position(1.25, 1.35);  // still inside: no repeat
    EXPECT_TRUE(Rig::on(rig.tick(), "alert/zone").empty());
}

TEST(Tick, HighMovementAndMediumScoreGiveNoVoice) {
    auto cfg = config();
    cfg.initialMovementHours = 5.30;
    Rig rig(cfg, table6_rules(1));
    rig.input.publish("user/game/score", {{"score100", 48}}, true);
    rig.position(4.25, 2.3);
    const auto frames = rig.tick();
    EXPECT_TRUE(Rig::on(frames, "care/reminder").empty());
    EXPECT_FALSE(rig.brain.last_decision().voiceMessageId.has_value());
}

TEST(Tick, LowMovementGivesCaregiverVoice13) {
    auto cfg = config();
    cfg.initialMovementHours = 1.15;
    Rig rig(cfg, table6_rules(0));
    rig.input.publish("user/game/score", {{"score100", 55}}, true);
    const auto reminders = Rig::on(rig.tick(), "care/reminder");
    ASSERT_EQ(reminders.size(), 1u);
    EXPECT_EQ(reminders[0].payload["voice"], 13);
    EXPECT_EQ(reminders[0].payload["origin"], "caregiver");
}

TEST(Tick, MorningGivesMedicationVoice1Image1) {
    Rig rig(config(ModePolicy::automated, 9.0));
    const auto reminders = Rig::on(rig.tick(), "care/reminder");
    ASSERT_EQ(reminders.size(), 1u);
    EXPECT_EQ(reminders[0].payload["voice"], 1);
    EXPECT_EQ(reminders[0].payload["image"], 1);
    EXPECT_EQ(reminders[0].payload["rule"], "R2");
}

TEST(Tick, RemindersAreEdgeTriggered) {
    Rig rig(config(ModePolicy::automated, 9.0));
    int n = 0;
    for (int i = 0; i < 20; ++i) n += static_cast<int>(Rig::on(rig.tick(), "care/reminder").size());
    EXPECT_EQ(n, 1);
    EXPECT_EQ(rig.brain.metrics().reminderCount, 1);
    EXPECT_EQ(rig.brain.metrics().perRuleFireCounts.at("R2"), 1);
}

TEST(Tick, GasRaisesAlertAndRelayCommand) {
    Rig rig(config());
    rig.input.publish("home/kitchen/gas", true);
    const auto frames = rig.tick();
    const auto gas = Rig::on(frames, "alert/gas");
    ASSERT_EQ(gas.size(), 1u);
    EXPECT_EQ(gas[0].payload["voice"], 2);
    const auto relay = Rig::on(frames, "home/kitchen/relay/set");
    ASSERT_EQ(relay.size(), 1u);
    EXPECT_EQ(relay[0].payload, json(true));
    EXPECT_EQ(rig.brain.metrics().alarmCount, 1);
}

TEST(Tick, FlameRaisesAlert) {
    Rig rig(config());
    rig.input.publish("home/bedroom/flame", true);
    EXPECT_EQ(Rig::on(rig.tick(), "alert/flame").size(), 1u);
}

TEST(Tick, SemiAutomatedSuppressesBuiltinRemindersButNotAlerts) {
    Rig rig(config(ModePolicy::semiAutomated, 9.0));
    rig.input.publish("home/kitchen/gas", true);
    rig.position(1.2, 1.3);
    const auto frames = rig.tick();
    EXPECT_TRUE(Rig::on(frames, "care/reminder").empty());
    EXPECT_EQ(Rig::on(frames, "alert/gas").size(), 1u);
    EXPECT_EQ(Rig::on(frames, "alert/zone").size(), 1u);
    EXPECT_EQ(rig.brain.registry().active_count(), 14u);
    EXPECT_EQ(rig.broker.loss_model().activeDevices, 14);
}

TEST(Tick, HighScoreGatesRemindersInAutomatedMode) {
    Rig rig(config(ModePolicy::automated, 9.0));
    rig.input.publish("user/game/score", {{"score100", 97}}, true);
    EXPECT_TRUE(Rig::on(rig.tick(), "care/reminder").empty());
    EXPECT_FALSE(rig.brain.last_decision().gatedRules.empty());
}

TEST(Tick, CaregiverModeOverrideSwitchesRegistry) {
    Rig rig(config(ModePolicy::adaptive));
    rig.tick();
    rig.probe.drain();
    rig.input.publish("care/mode", {{"mode", "semiAutomated"}, {"origin", "caregiver"}});
    const auto frames = rig.tick();
    EXPECT_EQ(rig.brain.mode(), Mode::semiAutomated);
    EXPECT_EQ(Rig::on(frames, "sys/device/+/active").size(), 8u);
    rig.input.publish("care/mode", {{"mode", "automated"}});
    for (int i = 0; i < 3; ++i) rig.input.publish("user/game/score", {{"score100", 97}}, true);
    rig.tick();
    EXPECT_EQ(rig.brain.mode(), Mode::automated);  // override beats the score
    EXPECT_EQ(rig.brain.registry().active_count(), 22u);
}

TEST(Tick, RuleEditTakesEffectOnTheNextTick) {
    Rig rig(config(ModePolicy::automated, 9.0));
    rig.input.publish("care/rules", {{"op", "disable"}, {"id", "R2"}, {"origin", "caregiver"}});
    EXPECT_TRUE(Rig::on(rig.tick(), "care/reminder").empty());
    EXPECT_FALSE(rig.store.current()->find("R2")->enabled);
    rig.input.publish("care/rules", {{"op", "enable"}, {"id", "R2"}});
    EXPECT_EQ(Rig::on(rig.tick(), "care/reminder").size(), 1u);
    rig.input.publish("care/rules", {{"op", "remove"}, {"id", "R404"}});
    rig.tick();
    ASSERT_FALSE(rig.brain.warnings().empty());
    EXPECT_TRUE(rig.brain.warnings().back().starts_with("RuleEditRejected"));
}

TEST(Tick, StaleInputFlaggedAfterThirtyTicks) {
    auto cfg = config();
    cfg.devices.clear();
    cfg.devices.push_back({"tag-1", habitat::DeviceKind::tag, "kitchen", true});
    Rig rig(cfg);
    rig.position(4, 2);
    for (int i = 0; i < 31; ++i) rig.tick();
    EXPECT_TRUE(rig.brain.warnings().empty());
    rig.tick();
    ASSERT_EQ(rig.brain.warnings().size(), 1u);
    EXPECT_TRUE(rig.brain.warnings()[0].starts_with("StaleInput: user/position"));
    for (int i = 0; i < 10; ++i) rig.tick();
    EXPECT_EQ(rig.brain.warnings().size(), 1u);  // flagged once per stale episode
    // Stale sources keep their last value.
    ASSERT_TRUE(rig.brain.snapshot(*rig.store.current(), rig.t).values.count("distance.refrigerator"));
}

TEST(Tick, SnapshotMapsClockToStartHourAndWraps) {
    Rig rig(config(ModePolicy::automated, 23.5));
    const auto s = rig.brain.snapshot(*rig.store.current(), 3600.0);
    EXPECT_DOUBLE_EQ(s.values.at("time"), 0.5);
    EXPECT_FALSE(s.values.count("game_score"));
}

// ------------------------------------------------------------ whole runs

namespace {

habitat::ScenarioSuite fig9() { return habitat::load_suite_file(test::data_path("scenarios/fig9.json")); }

}  // namespace

TEST(Run, EveryReminderTracesToAFiredRuleThatTick) {
    const auto suite = fig9();
    runtime::RunOptions opt;
    opt.policy = ModePolicy::automated;
    std::size_t seen = 0;
    long checked = 0;
    opt.onTick = [&](const Conductor& c, const habitat::Habitat&, double) {
        const auto& ev = c.events();
        const auto base = test::default_rules();
        for (; seen < ev.size(); ++seen) {
            if (ev[seen].kind != "reminder") continue;
            ++checked;
            const auto& fired = c.last_decision().firedRules;
            const bool found = std::any_of(fired.begin(), fired.end(),
                                           [&](const fuzzy::FiredRule& r) { return r.id == ev[seen].rule; });
            EXPECT_TRUE(found) << ev[seen].rule;
            const auto* rule = base.find(ev[seen].rule);
            ASSERT_NE(rule, nullptr);
            bool has_id = false;
            for (const auto& cq : rule->consequents)
                has_id |= (cq.variable == "voice" && cq.value == std::to_string(ev[seen].voiceId)) ||
                          (cq.variable == "image" && cq.value == std::to_string(ev[seen].imageId));
            EXPECT_TRUE(has_id) << ev[seen].rule;
        }
    };
    runtime::run_scenario(suite.runs[0], test::default_rules(), opt);
    EXPECT_GT(checked, 0);
}

TEST(Run, MetricsAreMonotoneWithinARun) {
    const auto suite = fig9();
    runtime::RunOptions opt;
    RunMetrics prev;
    opt.onTick = [&](const Conductor& c, const habitat::Habitat&, double) {
        const auto& m = c.metrics();
        EXPECT_GE(m.reminderCount, prev.reminderCount);
        EXPECT_GE(m.alarmCount, prev.alarmCount);
        EXPECT_GE(m.droppedMessages, prev.droppedMessages);
        EXPECT_GT(m.deviceActiveSeconds, prev.deviceActiveSeconds);
        for (const auto& [id, n] : prev.perRuleFireCounts) EXPECT_GE(m.perRuleFireCounts.at(id), n);
        prev = m;
    };
    runtime::run_scenario(suite.runs[0], test::default_rules(), opt);
}

TEST(Run, SuppressionAndLossDominanceOnEveryFig9Scenario) {
    for (const auto& s : fig9().runs) {
        runtime::RunOptions a, b;
        a.policy = ModePolicy::automated;
        b.policy = ModePolicy::semiAutomated;
        const auto autom = runtime::run_scenario(s, test::default_rules(), a);
        const auto semi = runtime::run_scenario(s, test::default_rules(), b);
        EXPECT_LE(semi.metrics.reminderCount, autom.metrics.reminderCount) << s.name;
        EXPECT_LE(semi.metrics.droppedMessages, autom.metrics.droppedMessages) << s.name;
        EXPECT_EQ(semi.metrics.alarmCount, autom.metrics.alarmCount) << s.name;  // alerts never suppressed
        EXPECT_EQ(semi.finalActiveDevices, 14);
        EXPECT_EQ(autom.finalActiveDevices, 22);
    }
}

TEST(Run, SameSeedSameMetricsAndFrameLog) {
    const auto s = fig9().runs[3];
    auto once = [&] {
        std::ostringstream log;
        runtime::RunOptions opt;
        opt.frameLog = &log;
        const auto r = runtime::run_scenario(s, test::default_rules(), opt);
        std::ostringstream csv;
        analytics::write_metrics_csv(csv, runtime::metrics_rows({r}));
        return csv.str() + log.str();
    };
    const auto a = once();
    EXPECT_EQ(a, once());
    EXPECT_GT(a.size(), 100000u);
}

TEST(Run, TwoConductorsShareOneBroker) {
    meshbus::Broker broker;
    fuzzy::RuleStore s1(test::default_rules()), s2(test::default_rules());
    Conductor a(broker, s1, config(ModePolicy::automated, 9.0));
    Conductor b(broker, s2, config(ModePolicy::automated, 9.0));
    a.tick(0);
    b.tick(0);
    EXPECT_EQ(a.metrics().reminderCount, 1);
    EXPECT_EQ(b.metrics().reminderCount, 1);
}
