#pragma once

#include <cstdint>
#include <memory>
#include <mutex>

#include "hearthguard/fuzzy/rule.hpp"

namespace hearthguard::fuzzy {

/// One-writer/many-reader holder of the live rule base.
///
/// Readers take an immutable snapshot; writers build a complete copy and swap
/// the pointer, so an evaluation always sees either the old or the new base.
class RuleStore {
public:
    struct Snapshot {
        std::shared_ptr<const RuleBase> base;
        std::uint64_t version = 0;
    };

    explicit RuleStore(RuleBase base)
        : current_{std::make_shared<const RuleBase>(std::move(base)), 0} {
        current_.base->validate();
    }

    Snapshot snapshot() const {
        std::lock_guard lk(ptr_mu_);
        return current_;
    }
    std::shared_ptr<const RuleBase> current() const { return snapshot().base; }

    /// Applies an edit atomically; on error the live base is unchanged and the error propagates.
    std::uint64_t apply(const RuleEdit& edit) {
        std::lock_guard writer(write_mu_);
        auto next = std::make_shared<const RuleBase>(apply_rule_edit(*snapshot().base, edit));
        return publish(std::move(next));
    }

    std::uint64_t replace(RuleBase base) {
        std::lock_guard writer(write_mu_);
        base.validate();
        return publish(std::make_shared<const RuleBase>(std::move(base)));
    }

private:
    std::uint64_t publish(std::shared_ptr<const RuleBase> next) {
        std::lock_guard lk(ptr_mu_);
        current_.base = std::move(next);
        return ++current_.version;
    }

    mutable std::mutex ptr_mu_;
    std::mutex write_mu_;
    Snapshot current_;
};

}  // namespace hearthguard::fuzzy
