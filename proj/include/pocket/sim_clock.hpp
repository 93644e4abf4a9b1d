#pragma once

namespace pocket {

// Logical scenario clock in seconds. Everything that happens in a trial is
// stamped against this clock: arena events, backend latencies, block
// application. Wall time never leaks in except through a live backend
// adapter, which converts its measured latency into an advance().
class SimClock {
public:
    SimClock() = default;
    explicit SimClock(double start_s) : now_s_(start_s) {}

    double now() const { return now_s_; }

    void advance(double dt_s) {
        if (dt_s > 0.0) now_s_ += dt_s;
    }

    void set(double t_s) {
        if (t_s > now_s_) now_s_ = t_s;
    }

private:
    double now_s_ = 0.0;
};

} // namespace pocket
