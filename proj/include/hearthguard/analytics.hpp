#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hearthguard/error.hpp"

namespace hearthguard::analytics {

// ---------------------------------------------------------------- correlation

namespace detail {

inline void check_pair(const std::vector<double>& x, const std::vector<double>& y, std::size_t min_n) {
    if (x.size() != y.size()) throw LengthMismatch("vectors differ in length");
    if (x.size() < min_n) throw InsufficientData("need at least " + std::to_string(min_n) + " values");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("values must be finite");
}

inline double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace detail

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    detail::check_pair(x, y, 3);
    const double mx = detail::mean(x), my = detail::mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("a vector is constant");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
        i = j + 1;
    }
    return rank;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    detail::check_pair(x, y, 3);
    return pearson(average_ranks(x), average_ranks(y));
}

// -------------------------------------------------------------------- t tests

struct GroupSummary {
    int n = 0;
    double mean = 0.0;
    double sd = 0.0;
};

/// Mean and sample standard deviation (n - 1 denominator).
inline GroupSummary summarize(const std::vector<double>& v) {
    if (v.size() < 2) throw InsufficientData("need at least 2 values");
    const double m = detail::mean(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return {static_cast<int>(v.size()), m, std::sqrt(ss / (v.size() - 1))};
}

enum class TTestVariant { pooled, welch };

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double pTwoSided = 1.0;
};

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    constexpr double tiny = 1e-300;
    double f = 1.0, c = 1.0, d = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const int m = i / 2;
        double num;
        if (i == 0)
            num = 1.0;
        else if (i % 2 == 0)
            num = (m * (b - m) * x) / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        else
            num = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        d = 1.0 / d;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        const double cd = c * d;
        f *= cd;
        if (std::abs(1.0 - cd) < 1e-15) break;
    }
    return std::exp(ln_front) * (f - 1.0) / a;
}

/// Student t cumulative distribution with (possibly fractional) df.
inline double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("df must be positive");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return t > 0 ? 1.0 - tail : tail;
}

inline double two_sided_p(double t, double df) {
    return std::min(1.0, 2.0 * student_t_cdf(-std::abs(t), df));
}

inline TTestResult t_test_from_summary(const GroupSummary& a, const GroupSummary& b,
                                       TTestVariant variant = TTestVariant::welch) {
    if (a.n < 2 || b.n < 2) throw InsufficientData("each group needs n >= 2");
    if (a.sd < 0 || b.sd < 0) throw std::invalid_argument("sd must be >= 0");
    if (a.sd == 0.0 && b.sd == 0.0) throw ZeroVariance("both groups have zero variance");
    const double va = a.sd * a.sd / a.n, vb = b.sd * b.sd / b.n;
    TTestResult r;
    if (variant == TTestVariant::pooled) {
        r.df = a.n + b.n - 2.0;
        const double sp2 = ((a.n - 1) * a.sd * a.sd + (b.n - 1) * b.sd * b.sd) / r.df;
        r.t = (a.mean - b.mean) / std::sqrt(sp2 * (1.0 / a.n + 1.0 / b.n));
    } else {
        r.t = (a.mean - b.mean) / std::sqrt(va + vb);
        r.df = (va + vb) * (va + vb) / (va * va / (a.n - 1) + vb * vb / (b.n - 1));
    }
    r.pTwoSided = two_sided_p(r.t, r.df);
    return r;
}

inline TTestResult t_test(const std::vector<double>& x, const std::vector<double>& y,
                          TTestVariant variant = TTestVariant::welch) {
    return t_test_from_summary(summarize(x), summarize(y), variant);
}

// ------------------------------------------------------------------------ csv

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw CsvError("no column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }

    std::vector<double> numeric_column(const std::string& name) const {
        const auto c = column_index(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto& cell = rows[r][c];
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cell.size())
                throw CsvError("row " + std::to_string(r + 2) + " column '" + name + "': not a number: '" + cell + "'");
            out.push_back(v);
        }
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (quoted) throw CsvError("line " + std::to_string(lineno) + ": unterminated quote");
    out.push_back(std::move(cur));
    return out;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line, lineno);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw CsvError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                           " fields, got " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw CsvError("empty csv");
    return t;
}

inline CsvTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

inline void write_csv(std::ostream& out, const CsvTable& t) {
    auto row = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << detail::csv_field(r[i]);
        out << '\n';
    };
    row(t.header);
    for (const auto& r : t.rows) row(r);
}

/// Shortest decimal that round-trips; keeps CSV output stable across runs.
inline std::string format_number(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(std::numeric_limits<double>::max_digits10);
    os << v;
    std::string s = os.str();
    for (int p = 1; p < std::numeric_limits<double>::max_digits10; ++p) {
        std::ostringstream o2;
        o2.imbue(std::locale::classic());
        o2.precision(p);
        o2 << v;
        if (std::stod(o2.str()) == v) return o2.str();
    }
    return s;
}

// ---------------------------------------------------------------- run metrics

/// Something the conductor did during a run.
struct RunEvent {
    double time = 0.0;   // s since run start
    std::string kind;    // "reminder" or "alarm"
    int voiceId = 0;     // 0 when absent
    int imageId = 0;
    std::string rule;
};

struct RunLog {
    std::string scenario;
    std::string mode;
    int gameScore = 0;
    std::vector<RunEvent> events;
    long droppedMessages = 0;
    double activeDeviceSeconds = 0.0;
    double movementHours = 0.0;
    int activeDevices = 0;
};

struct MetricsRow {
    std::string scenario;
    std::string mode;
    int gameScore = 0;
    long reminders = 0;
    long alarms = 0;
    long dropped = 0;
    double activeDeviceSeconds = 0.0;
    double movementHours = 0.0;
    std::vector<int> voiceIds;  // distinct, in order of first emission
    std::vector<int> imageIds;
    int activeDevices = 0;
};

inline MetricsRow aggregate(const RunLog& log) {
    MetricsRow row{log.scenario, log.mode, log.gameScore, 0, 0, log.droppedMessages, log.activeDeviceSeconds,
                   log.movementHours, {}, {}, log.activeDevices};
    auto note = [](std::vector<int>& ids, int id) {
        if (id > 0 && std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    };
    for (const auto& e : log.events) {
        if (e.kind == "reminder")
            ++row.reminders;
        else if (e.kind == "alarm")
            ++row.alarms;
        note(row.voiceIds, e.voiceId);
        note(row.imageIds, e.imageId);
    }
    return row;
}

inline std::vector<MetricsRow> aggregate_run_metrics(const std::vector<RunLog>& logs) {
    if (logs.empty()) throw EmptyLog("no run logs to aggregate");
    std::vector<MetricsRow> rows;
    rows.reserve(logs.size());
    for (const auto& l : logs) rows.push_back(aggregate(l));
    return rows;
}

inline std::string join_ids(const std::vector<int>& ids) {
    if (ids.empty()) return "-";
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ";" : "") + std::to_string(ids[i]);
    return s;
}

inline const std::vector<std::string>& metrics_header() {
    static const std::vector<std::string> h{"scenario", "mode",          "gameScore", "reminders",
                                            "alarms",   "dropped",       "activeDeviceSeconds",
                                            "movementHours", "voiceIds", "imageIds", "activeDevices"};
    return h;
}

inline CsvTable metrics_table(const std::vector<MetricsRow>& rows) {
    CsvTable t{metrics_header(), {}};
    for (const auto& r : rows) {
        t.rows.push_back({r.scenario, r.mode, std::to_string(r.gameScore), std::to_string(r.reminders),
                          std::to_string(r.alarms), std::to_string(r.dropped), format_number(r.activeDeviceSeconds),
                          format_number(r.movementHours), join_ids(r.voiceIds), join_ids(r.imageIds),
                          std::to_string(r.activeDevices)});
    }
    return t;
}

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    write_csv(out, metrics_table(rows));
}

}  // namespace hearthguard::analytics
