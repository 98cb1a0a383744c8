#include "sqn/simulator.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace sqn {

namespace {
std::string describe(const Event& e, const std::string& what) {
    std::ostringstream os;
    os.precision(17);
    os << "event #" << e.seq << " '" << e.kind << "' at t=" << e.time << ": " << what;
    return os.str();
}
}  // namespace

EventError::EventError(const Event& event, const std::string& what)
    : std::runtime_error(describe(event, what)), time_(event.time), seq_(event.seq), kind_(event.kind) {}

Simulator::Simulator(std::uint64_t root_seed, double start_time)
    : root_seed_(root_seed), now_(start_time) {}

std::uint64_t Simulator::schedule(double time, std::string kind, std::function<void(Simulator&)> action) {
    if (!std::isfinite(time)) throw ScheduleError("event time must be finite");
    if (time < now_) {
        std::ostringstream os;
        os.precision(17);
        os << "cannot schedule '" << kind << "' at t=" << time << " before now=" << now_;
        throw ScheduleError(os.str());
    }
    const std::uint64_t seq = next_seq_++;
    queue_.push(Event{time, seq, std::move(kind), std::move(action)});
    return seq;
}

std::uint64_t Simulator::schedule_in(double delay, std::string kind, std::function<void(Simulator&)> action) {
    if (delay < 0.0) throw ScheduleError("negative delay");
    return schedule(now_ + delay, std::move(kind), std::move(action));
}

void Simulator::dispatch() {
    // priority_queue::top is const; the event is moved out before pop.
    Event event = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    now_ = event.time;
    ++processed_;
    try {
        if (event.action) event.action(*this);
    } catch (const EventError&) {
        throw;
    } catch (const std::exception& ex) {
        throw EventError(event, ex.what());
    }
}

std::size_t Simulator::run_until(double t_end) {
    if (t_end < now_) throw ScheduleError("run_until target is in the past");
    std::size_t count = 0;
    while (!queue_.empty() && queue_.top().time <= t_end) {
        dispatch();
        ++count;
    }
    now_ = t_end;
    return count;
}

std::size_t Simulator::run() {
    std::size_t count = 0;
    while (!queue_.empty()) {
        dispatch();
        ++count;
    }
    return count;
}

}  // namespace sqn
