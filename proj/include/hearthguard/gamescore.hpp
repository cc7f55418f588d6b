#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearthguard/error.hpp"

namespace hearthguard::gamescore {

inline constexpr int kTaskCount = 5;
inline constexpr int kSeriesCount = 3;
inline constexpr double kTimeLimitSeconds = 600.0;
inline constexpr double kPenaltyFreeSeconds = 120.0;
inline constexpr double kPenaltySpanSeconds = 960.0;
inline constexpr double kOverviewSeconds = 10.0;

/// Tasks 3 and 4 record right and wrong decisions; the others count only correct answers.
inline bool records_wrong_answers(int taskIndex) { return taskIndex == 3 || taskIndex == 4; }

struct TaskResult {
    int taskIndex = 1;
    int correct = 0;
    int wrong = 0;
    double durationSeconds = 0.0;
    bool operator==(const TaskResult&) const = default;
};

enum class SessionStatus { completed, timedOut, abandoned };

inline std::string to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::completed: return "completed";
        case SessionStatus::timedOut: return "timedOut";
        case SessionStatus::abandoned: return "abandoned";
    }
    return "?";
}

struct GameSession {
    int seriesId = 1;
    std::vector<TaskResult> tasks;
    double totalSeconds = 0.0;
    SessionStatus status = SessionStatus::completed;
};

struct ScoreReport {
    int points = 0;
    int score100 = 0;
    double totalSeconds = 0.0;
    int seriesId = 1;
    bool operator==(const ScoreReport&) const = default;
};

inline void validate_task(const TaskResult& t) {
    if (t.taskIndex < 1 || t.taskIndex > kTaskCount) throw InvalidSession("task index must be 1-5");
    if (t.correct < 0 || t.wrong < 0) throw InvalidSession("answer counts must be >= 0");
    if (!(t.durationSeconds >= 0.0) || !std::isfinite(t.durationSeconds))
        throw InvalidSession("task duration must be finite and >= 0");
    if (records_wrong_answers(t.taskIndex)) {
        if (t.correct + t.wrong < 1) throw InvalidSession("task " + std::to_string(t.taskIndex) + " has no decision");
    } else {
        if (t.wrong != 0) throw InvalidSession("task " + std::to_string(t.taskIndex) + " does not score wrong answers");
        if (t.correct > 1) throw InvalidSession("task " + std::to_string(t.taskIndex) + " has at most one answer");
    }
}

/// Validates the session and sets timedOut when the cap was exceeded.
inline GameSession finalize(GameSession s) {
    if (s.seriesId < 1 || s.seriesId > kSeriesCount) throw InvalidSession("series id must be 1-3");
    if (s.tasks.size() > kTaskCount) throw InvalidSession("a session has at most 5 tasks");
    double sum = 0.0;
    std::array<bool, kTaskCount + 1> seen{};
    for (const auto& t : s.tasks) {
        validate_task(t);
        if (seen[t.taskIndex]) throw InvalidSession("duplicate task " + std::to_string(t.taskIndex));
        seen[t.taskIndex] = true;
        sum += t.durationSeconds;
    }
    if (s.totalSeconds + 1e-9 < sum) throw InvalidSession("total time is shorter than the task times");
    if (s.totalSeconds > kTimeLimitSeconds && s.status == SessionStatus::completed) s.status = SessionStatus::timedOut;
    return s;
}

inline double time_factor(double totalSeconds) {
    return std::clamp(1.0 - (totalSeconds - kPenaltyFreeSeconds) / kPenaltySpanSeconds, 0.5, 1.0);
}

/// 0-100 result: fraction of points scaled by a linear time penalty.
inline int normalize_score(int points, double totalSeconds, bool timedOut) {
    double v = 100.0 * (points / 5.0) * time_factor(totalSeconds);
    if (timedOut) v = std::min(v, 50.0 * points / 5.0);
    return static_cast<int>(std::lround(v));
}

inline ScoreReport score_session(const GameSession& raw) {
    if (raw.status == SessionStatus::abandoned) throw InvalidSession("abandoned sessions are not scored");
    const GameSession s = finalize(raw);
    if (s.status == SessionStatus::completed && s.tasks.size() < kTaskCount)
        throw IncompleteSession("completed session has " + std::to_string(s.tasks.size()) + " of 5 tasks");
    int points = 0;
    for (const auto& t : s.tasks)
        if (t.correct > 0) ++points;
    return {points, normalize_score(points, s.totalSeconds, s.status == SessionStatus::timedOut), s.totalSeconds,
            s.seriesId};
}

/// Uniform over the three series, never repeating the previous one.
template <typename Rng>
int select_series(const std::vector<int>& history, Rng& rng) {
    if (history.empty()) return std::uniform_int_distribution<int>(1, kSeriesCount)(rng);
    const int prev = history.back();
    int pick = std::uniform_int_distribution<int>(1, kSeriesCount - 1)(rng);
    if (prev >= 1 && prev <= kSeriesCount && pick >= prev) ++pick;
    return pick;
}

struct PlayerModel {
    double logMeanSeconds = 2.3;  // ln of a typical task time (about 10 s)
    double logSigma = 0.4;
};

/// Each task is answered correctly with probability `ability`. Durations are
/// lognormal, with the log-mean raised by (1 - ability).
template <typename Rng>
GameSession simulate_player(double ability, Rng& rng, int seriesId = 1, const PlayerModel& model = {}) {
    if (!(ability >= 0.0 && ability <= 1.0)) throw std::invalid_argument("ability must be in [0, 1]");
    std::bernoulli_distribution right(ability);
    std::lognormal_distribution<double> dur(model.logMeanSeconds + (1.0 - ability), model.logSigma);
    GameSession s;
    s.seriesId = seriesId;
    double total = kOverviewSeconds;
    for (int i = 1; i <= kTaskCount; ++i) {
        TaskResult t;
        t.taskIndex = i;
        const bool ok = right(rng);
        t.correct = ok ? 1 : 0;
        if (records_wrong_answers(i)) t.wrong = ok ? 0 : 1;
        t.durationSeconds = dur(rng);
        total += t.durationSeconds;
        s.tasks.push_back(t);
    }
    s.totalSeconds = total;
    return finalize(s);
}

inline nlohmann::json to_json(const ScoreReport& r) {
    return {{"points", r.points}, {"score100", r.score100}, {"totalSeconds", r.totalSeconds}, {"seriesId", r.seriesId}};
}

inline ScoreReport score_report_from_json(const nlohmann::json& j) {
    ScoreReport r;
    r.points = j.value("points", 0);
    r.score100 = j.at("score100").get<int>();
    r.totalSeconds = j.value("totalSeconds", 0.0);
    r.seriesId = j.value("seriesId", 1);
    return r;
}

inline constexpr const char* kScoreTopic = "user/game/score";

}  // namespace hearthguard::gamescore
