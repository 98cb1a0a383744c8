#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqn/rng.hpp"

namespace sqn {

class Simulator;

/// A pending action. Dequeue order is (time, seq) lexicographic; seq is
/// assigned in schedule-call order.
struct Event {
    double time = 0.0;
    std::uint64_t seq = 0;
    std::string kind;
    std::function<void(Simulator&)> action;
};

class ScheduleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised by run_until when a handler throws; identifies the event.
class EventError : public std::runtime_error {
public:
    EventError(const Event& event, const std::string& what);

    double time() const { return time_; }
    std::uint64_t seq() const { return seq_; }
    const std::string& kind() const { return kind_; }

private:
    double time_;
    std::uint64_t seq_;
    std::string kind_;
};

/// Single-threaded discrete-event core.
class Simulator {
public:
    explicit Simulator(std::uint64_t root_seed = 0, double start_time = 0.0);

    double now() const { return now_; }
    std::uint64_t root_seed() const { return root_seed_; }

    /// Enqueue an action at absolute `time` (>= now()). Returns its seq.
    std::uint64_t schedule(double time, std::string kind, std::function<void(Simulator&)> action);
    std::uint64_t schedule_in(double delay, std::string kind, std::function<void(Simulator&)> action);

    /// Process every event with time <= t_end; the clock finishes at t_end.
    std::size_t run_until(double t_end);

    /// Drain the queue completely.
    std::size_t run();

    std::size_t pending() const { return queue_.size(); }
    std::uint64_t scheduled() const { return next_seq_; }
    std::uint64_t processed() const { return processed_; }

    RngStream stream(StreamKey key) const { return RngStream(root_seed_, key); }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    void dispatch();

    std::uint64_t root_seed_;
    double now_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t processed_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

}  // namespace sqn
