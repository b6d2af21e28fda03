#pragma once

#include <string>
#include <vector>

namespace iag {

struct Flag {
    std::string stage;
    std::string message;
};

// Warnings and degraded-mode flags raised while processing. Not thread-safe:
// parallel stages hand their flags back with their results and the caller
// records them in input order, which keeps output deterministic.
class Diagnostics {
public:
    void flag(std::string stage, std::string message) {
        flags_.push_back({std::move(stage), std::move(message)});
    }
    const std::vector<Flag>& flags() const { return flags_; }
    bool empty() const { return flags_.empty(); }
    void clear() { flags_.clear(); }

private:
    std::vector<Flag> flags_;
};

inline void flag(Diagnostics* diag, std::string stage, std::string message) {
    if (diag) diag->flag(std::move(stage), std::move(message));
}

}  // namespace iag
