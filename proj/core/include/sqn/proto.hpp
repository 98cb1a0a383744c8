#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "sqn/channel.hpp"
#include "sqn/geom.hpp"
#include "sqn/simulator.hpp"
#include "sqn/trace.hpp"

namespace sqn {

class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Ebit inventory

enum class PairClass { Raw, Distilled };

struct PairEntry {
    std::uint64_t pair_id = 0;
    double created_at = 0.0;
    PairClass cls = PairClass::Raw;
};

/// One station's halves of the pairs it shares with a peer station. Entries
/// are kept in creation order. A pair is usable at time t iff
/// t - created_at <= coherence_time.
class EbitPool {
public:
    EbitPool(std::uint32_t owner_a, std::uint32_t owner_b, double coherence_time, std::size_t capacity);

    std::uint32_t owner_a() const { return owner_a_; }
    std::uint32_t owner_b() const { return owner_b_; }
    double coherence_time() const { return coherence_time_; }
    std::size_t capacity() const { return capacity_; }

    /// False when the pool is full. Throws ProtocolError on a duplicate id.
    bool deposit(const PairEntry& entry);

    std::size_t size() const { return entries_.size(); }
    std::size_t count(PairClass cls) const;
    std::size_t count_valid(PairClass cls, double t) const;
    bool valid_at(const PairEntry& entry, double t) const { return t - entry.created_at <= coherence_time_; }

    /// Oldest usable entry of `cls` at time t; expired entries of that class
    /// ahead of it are discarded.
    std::optional<PairEntry> take_oldest_valid(PairClass cls, double t);

    /// Remove a specific pair; nullopt if absent.
    std::optional<PairEntry> take(std::uint64_t pair_id);

    /// Remove every entry of `cls`, returning them.
    std::vector<PairEntry> take_all(PairClass cls);

    std::vector<std::uint64_t> ids(PairClass cls) const;
    const std::deque<PairEntry>& entries() const { return entries_; }

private:
    std::uint32_t owner_a_;
    std::uint32_t owner_b_;
    double coherence_time_;
    std::size_t capacity_;
    std::deque<PairEntry> entries_;
    std::unordered_set<std::uint64_t> present_;
};

// ---------------------------------------------------------------------------
// Session state machine

enum class FailureReason { NoCoordinator, NoSatellite, LinkLost, InsufficientEntanglement };
std::string_view to_string(FailureReason reason);

namespace state {
struct Idle {};
struct Requested {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double t0 = 0.0;
};
struct Coordinating {
    std::uint32_t geo_id = 0;
};
struct Distributing {
    std::uint32_t leo_id = 0;
    std::uint64_t pairs_target = 0;
};
struct Distilling {
    std::uint64_t raw_count = 0;
    std::uint32_t rounds_remaining = 0;
};
struct Teleporting {
    std::uint64_t qubits_remaining = 0;
};
struct Done {
    std::uint64_t qubits_delivered = 0;
};
struct Failed {
    FailureReason reason = FailureReason::NoCoordinator;
};
}  // namespace state

using SessionState = std::variant<state::Idle, state::Requested, state::Coordinating, state::Distributing,
                                  state::Distilling, state::Teleporting, state::Done, state::Failed>;

std::string_view state_name(const SessionState& s);
bool is_terminal(const SessionState& s);

/// Edges of the protocol order: Idle -> Requested -> Coordinating ->
/// Distributing -> Distilling (-> Distilling per round) -> Teleporting ->
/// Done, with Failed reachable from every non-terminal state.
bool transition_allowed(std::string_view from, std::string_view to);

// ---------------------------------------------------------------------------
// Distillation and teleportation primitives

struct DistillationPolicy {
    std::uint32_t rounds = 1;
    /// Ebits per raw pair. When unset the session uses the mean RCI of the
    /// per-pair product transmittance it observed, capped at 1.
    std::optional<double> yield_rate;
};

struct DistillOutcome {
    std::uint64_t raw_total = 0;
    std::uint64_t raw_valid = 0;
    std::uint64_t distilled = 0;
    double completion_time = 0.0;
};

/// Converts the raw pairs common to both pools into floor(n_valid * yield)
/// distilled pairs stamped at completion = t + rounds * rtt. n_valid counts
/// raw pairs still coherent at completion. Throws ProtocolError if the pools
/// disagree on their raw pair ids.
DistillOutcome distill(EbitPool& pool_a, EbitPool& pool_b, const DistillationPolicy& policy, double yield_rate,
                       double t, double rtt, std::uint64_t& next_pair_id);

struct ConsumeRecord {
    std::uint64_t pair_id = 0;
    double created_at = 0.0;
    double consumed_at = 0.0;
};

/// Consumes one distilled pair from both pools that is still coherent at
/// `consume_time`, oldest first.
std::optional<ConsumeRecord> consume_distilled(EbitPool& pool_a, EbitPool& pool_b, double consume_time);

struct TeleportOutcome {
    std::uint64_t delivered = 0;
    std::uint64_t classical_bits = 0;
    std::vector<ConsumeRecord> consumed;
};

/// Teleports up to `qubits` qubits measured at t; each costs one distilled
/// ebit, which must survive until the corrections land at t + one_way_delay,
/// and two classical bits.
TeleportOutcome teleport(EbitPool& pool_a, EbitPool& pool_b, std::uint64_t qubits, double t, double one_way_delay);

// ---------------------------------------------------------------------------
// Network and protocol driver

struct DownlinkConfig {
    double b = 0.1;
    double wavelength = 1.55e-6;
    /// Per-station fixed eta0 replacing the diffraction value (test doubles).
    std::map<std::uint32_t, double> fixed_eta;
};

struct ProtocolParams {
    std::uint64_t pairs_target = 10'000;
    double pair_rate_hz = 1e6;
    std::uint64_t min_raw_pairs = 1;
    DistillationPolicy policy;
    double teleport_interval = 1e-6;
    double min_elevation = constants::kDefaultMinElevation;
    bool earth_rotation = false;
};

struct Network {
    std::vector<GroundStation> stations;
    std::vector<Satellite> satellites;
    DownlinkConfig downlink;
    ProtocolParams params;

    const GroundStation& station(std::uint32_t id) const;
    const Satellite& satellite(std::uint32_t id) const;
    std::vector<Satellite> tier(Tier t) const;
};

struct Session {
    Session(std::uint64_t id_, std::uint32_t a_, std::uint32_t b_, std::uint64_t qubits, EbitPool pa, EbitPool pb)
        : id(id_), a(a_), b(b_), qubits_requested(qubits), pool_a(std::move(pa)), pool_b(std::move(pb)) {}

    std::uint64_t id = 0;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint64_t qubits_requested = 0;
    SessionState state = state::Idle{};
    std::vector<std::string> history;

    std::optional<std::uint32_t> geo_id;
    std::optional<std::uint32_t> leo_id;

    std::uint64_t pairs_attempted = 0;
    std::uint64_t pairs_survived = 0;
    std::uint64_t pairs_deposited = 0;
    std::uint64_t distilled_created = 0;
    std::uint64_t ebits_consumed = 0;
    std::uint64_t qubits_delivered = 0;
    std::uint64_t classical_bits = 0;
    double yield_rate = 0.0;
    bool link_lost = false;
    double last_delivery_at = 0.0;

    EbitPool pool_a;
    EbitPool pool_b;
};

struct RunSummary {
    std::uint64_t sessions = 0;
    std::uint64_t sessions_done = 0;
    std::uint64_t sessions_failed = 0;
    std::uint64_t qubits_delivered = 0;
    std::uint64_t ebits_consumed = 0;
    std::uint64_t pairs_attempted = 0;
    std::uint64_t pairs_survived = 0;
};

/// Drives sessions of the GEO-coordinated distribution protocol on a
/// Simulator. All state changes happen inside simulator events.
class Protocol {
public:
    Protocol(Simulator& sim, Network network, TraceSink& sink);

    /// Validates and schedules a request from station a at time t; returns
    /// the session id. Throws ProtocolError for a == b, qubits == 0, unknown
    /// stations or t < now.
    std::uint64_t request(std::uint32_t a, std::uint32_t b, std::uint64_t qubits, double t);

    const Session& session(std::uint64_t id) const;
    const std::map<std::uint64_t, Session>& sessions() const { return sessions_; }
    const Network& network() const { return network_; }

    RunSummary summary() const;
    /// Writes the summary record (session_id 0) to the trace.
    void emit_summary(double t);

private:
    Session& mut(std::uint64_t id);
    void transition(Session& s, SessionState next);
    void fail(Session& s, FailureReason reason);
    void trace(std::uint64_t session_id, std::string event, std::vector<TraceField> payload);
    std::uint64_t send_radio(Session& s, std::string_view kind, std::string_view from, std::string_view to,
                             double distance, std::function<void(Simulator&)> on_arrival);

    void handle_request(std::uint64_t id);
    void geo_coordinate(std::uint64_t id);
    void leo_acknowledge(std::uint64_t id);
    void leo_distribute(std::uint64_t id);
    void finish_distribution(std::uint64_t id);
    void distill_round(std::uint64_t id, std::uint32_t round);
    void distill_complete(std::uint64_t id, DistillOutcome outcome);
    void teleport_next(std::uint64_t id, std::uint64_t index);
    void finish_teleport(std::uint64_t id);

    Vec3 station_pos(std::uint32_t id, double t) const;
    Vec3 sat_pos(std::uint32_t id, double t) const;
    double one_way_ground_delay(const Session& s, double t) const;

    Simulator& sim_;
    Network network_;
    TraceSink& sink_;
    std::map<std::uint64_t, Session> sessions_;
    std::uint64_t next_session_ = 1;
    std::uint64_t next_message_ = 1;
    std::uint64_t next_pair_id_ = 1;
};

}  // namespace sqn
