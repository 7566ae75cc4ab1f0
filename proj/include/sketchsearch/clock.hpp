#pragma once

#include <chrono>

namespace sketchsearch {

/// Time source for the search engine, in seconds since the clock started.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() const = 0;
    /// Accounts for work whose duration is declared rather than measured
    /// (environment step costs). Wall clocks ignore it.
    virtual void charge(double seconds) = 0;
};

class VirtualClock final : public Clock {
public:
    double now() const override { return now_; }
    void charge(double seconds) override { now_ += seconds; }
    void set(double seconds) { now_ = seconds; }

private:
    double now_ = 0.0;
};

class WallClock final : public Clock {
public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    double now() const override {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    void charge(double) override {}

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace sketchsearch
