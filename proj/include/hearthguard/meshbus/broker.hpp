#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hearthguard/error.hpp"
#include "hearthguard/meshbus/frame.hpp"
#include "hearthguard/meshbus/topic.hpp"

namespace hearthguard::meshbus {

/// Drop probability p0 * active / max, applied once per publish before fan-out.
struct LossModel {
    double baseProbability = 0.0;
    int activeDevices = 0;
    int maxDevices = 1;
    /// Topic prefixes never dropped.
    std::vector<std::string> exemptPrefixes{"sys/", "care/", "alert/"};

    double effective() const {
        if (maxDevices <= 0) return 0.0;
        return std::clamp(baseProbability * activeDevices / maxDevices, 0.0, 1.0);
    }
    bool exempt(const std::string& topic) const {
        for (const auto& p : exemptPrefixes)
            if (topic.compare(0, p.size(), p) == 0) return true;
        return false;
    }
};

struct BrokerStats {
    std::uint64_t published = 0;  // accepted publish requests
    std::uint64_t dropped = 0;    // lost to the loss model
    std::uint64_t delivered = 0;  // frames handed to subscriber sinks
};

/// Topic table and retained store.
///
/// Every operation runs under one mutex, so each frame is handled atomically and
/// all subscribers see frames in publish order. Sinks run under that mutex and
/// must not call back into the broker.
class Broker {
public:
    using ClientId = std::uint64_t;
    using Sink = std::function<void(const Frame&)>;
    /// Observes every publish after the loss decision.
    using Tap = std::function<void(const Frame&, bool dropped)>;

    explicit Broker(std::uint64_t lossSeed = 0) : rng_(lossSeed) {}

    ClientId connect(std::string name, Sink sink) {
        std::lock_guard lk(mu_);
        const ClientId id = ++next_id_;
        clients_[id] = Client{std::move(name), std::move(sink), {}};
        return id;
    }

    void disconnect(ClientId id) {
        std::lock_guard lk(mu_);
        clients_.erase(id);
    }

    bool connected(ClientId id) const {
        std::lock_guard lk(mu_);
        return clients_.count(id) != 0;
    }

    /// Adds a filter and delivers matching retained frames, sorted by topic.
    void subscribe(ClientId id, const std::string& filter) {
        validate_filter(filter);
        std::lock_guard lk(mu_);
        auto& c = client(id);
        c.filters.insert(filter);
        for (const auto& [topic, frame] : retained_) {
            if (!matches(filter, topic)) continue;
            Frame out = frame;
            out.retain = true;
            deliver(c, out);
        }
    }

    void unsubscribe(ClientId id, const std::string& filter) {
        validate_filter(filter);
        std::lock_guard lk(mu_);
        client(id).filters.erase(filter);
    }

    /// Returns false when the loss model dropped the frame.
    bool publish(ClientId id, Frame f) {
        f.op = Op::pub;
        validate_frame(f);
        std::lock_guard lk(mu_);
        client(id);
        ++stats_.published;
        const std::string& topic = *f.topic;
        bool drop = false;
        if (!loss_.exempt(topic)) {
            const double p = loss_.effective();
            if (p > 0.0) drop = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
        }
        if (tap_) tap_(f, drop);
        if (drop) {
            ++stats_.dropped;
            return false;
        }
        if (f.retain) {
            if (f.payload.is_null())
                retained_.erase(topic);
            else
                retained_[topic] = f;
        }
        Frame out = f;
        out.retain = false;
        for (auto& [cid, c] : clients_) {
            for (const auto& filter : c.filters) {
                if (matches(filter, topic)) {
                    deliver(c, out);
                    break;
                }
            }
        }
        return true;
    }

    std::optional<Frame> retained(const std::string& topic) const {
        std::lock_guard lk(mu_);
        auto it = retained_.find(topic);
        if (it == retained_.end()) return std::nullopt;
        return it->second;
    }

    void set_loss_model(LossModel m) {
        std::lock_guard lk(mu_);
        loss_ = std::move(m);
    }
    void set_active_devices(int n) {
        std::lock_guard lk(mu_);
        loss_.activeDevices = n;
    }
    LossModel loss_model() const {
        std::lock_guard lk(mu_);
        return loss_;
    }
    void set_tap(Tap tap) {
        std::lock_guard lk(mu_);
        tap_ = std::move(tap);
    }
    BrokerStats stats() const {
        std::lock_guard lk(mu_);
        return stats_;
    }

private:
    struct Client {
        std::string name;
        Sink sink;
        std::set<std::string> filters;
    };

    Client& client(ClientId id) {
        auto it = clients_.find(id);
        if (it == clients_.end()) throw NotConnected("client " + std::to_string(id) + " is not connected");
        return it->second;
    }

    void deliver(Client& c, const Frame& f) {
        ++stats_.delivered;
        if (c.sink) c.sink(f);
    }

    mutable std::mutex mu_;
    std::map<ClientId, Client> clients_;
    std::map<std::string, Frame> retained_;
    ClientId next_id_ = 0;
    LossModel loss_;
    std::mt19937_64 rng_;
    Tap tap_;
    BrokerStats stats_;
};

/// Thread-safe inbox usable as a broker sink.
class Mailbox {
public:
    Broker::Sink sink() {
        return [this](const Frame& f) { push(f); };
    }

    void push(Frame f) {
        {
            std::lock_guard lk(mu_);
            q_.push_back(std::move(f));
        }
        cv_.notify_all();
    }

    std::vector<Frame> drain() {
        std::lock_guard lk(mu_);
        std::vector<Frame> out(std::make_move_iterator(q_.begin()), std::make_move_iterator(q_.end()));
        q_.clear();
        return out;
    }

    std::optional<Frame> pop(std::chrono::milliseconds timeout) {
        std::unique_lock lk(mu_);
        if (!cv_.wait_for(lk, timeout, [&] { return !q_.empty(); })) return std::nullopt;
        Frame f = std::move(q_.front());
        q_.pop_front();
        return f;
    }

    std::size_t size() const {
        std::lock_guard lk(mu_);
        return q_.size();
    }

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Frame> q_;
};

/// In-process client bound to one broker connection.
class LocalClient {
public:
    LocalClient(Broker& broker, std::string name) : broker_(broker), id_(broker.connect(std::move(name), box_.sink())) {}
    ~LocalClient() { broker_.disconnect(id_); }
    LocalClient(const LocalClient&) = delete;
    LocalClient& operator=(const LocalClient&) = delete;

    void subscribe(const std::string& filter) { broker_.subscribe(id_, filter); }
    void unsubscribe(const std::string& filter) { broker_.unsubscribe(id_, filter); }
    bool publish(const std::string& topic, nlohmann::json payload, bool retain = false) {
        return broker_.publish(id_, make_pub(topic, std::move(payload), retain, ++seq_));
    }
    std::vector<Frame> drain() { return box_.drain(); }
    Mailbox& mailbox() { return box_; }
    Broker::ClientId id() const { return id_; }

private:
    Broker& broker_;
    Mailbox box_;
    Broker::ClientId id_;
    std::uint32_t seq_ = 0;
};

}  // namespace hearthguard::meshbus
