#include "sqn/proto.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "sqn/rates.hpp"
#include "sqn/rng.hpp"

namespace sqn {

// ---------------------------------------------------------------------------
// EbitPool

EbitPool::EbitPool(std::uint32_t owner_a, std::uint32_t owner_b, double coherence_time, std::size_t capacity)
    : owner_a_(owner_a), owner_b_(owner_b), coherence_time_(coherence_time), capacity_(capacity) {
    if (!(coherence_time > 0.0)) throw ProtocolError("pool coherence time must be > 0");
}

bool EbitPool::deposit(const PairEntry& entry) {
    if (present_.contains(entry.pair_id)) throw ProtocolError("duplicate pair id " + std::to_string(entry.pair_id));
    if (entries_.size() >= capacity_) return false;
    entries_.push_back(entry);
    present_.insert(entry.pair_id);
    return true;
}

std::size_t EbitPool::count(PairClass cls) const {
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.cls == cls; }));
}

std::size_t EbitPool::count_valid(PairClass cls, double t) const {
    return static_cast<std::size_t>(std::count_if(
        entries_.begin(), entries_.end(), [&](const auto& e) { return e.cls == cls && valid_at(e, t); }));
}

std::optional<PairEntry> EbitPool::take_oldest_valid(PairClass cls, double t) {
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (it->cls != cls) {
            ++it;
            continue;
        }
        if (!valid_at(*it, t)) {
            present_.erase(it->pair_id);
            it = entries_.erase(it);
            continue;
        }
        PairEntry out = *it;
        present_.erase(out.pair_id);
        entries_.erase(it);
        return out;
    }
    return std::nullopt;
}

std::optional<PairEntry> EbitPool::take(std::uint64_t pair_id) {
    const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.pair_id == pair_id; });
    if (it == entries_.end()) return std::nullopt;
    PairEntry out = *it;
    present_.erase(pair_id);
    entries_.erase(it);
    return out;
}

std::vector<PairEntry> EbitPool::take_all(PairClass cls) {
    std::vector<PairEntry> out;
    std::deque<PairEntry> kept;
    for (const auto& e : entries_) {
        if (e.cls == cls) {
            out.push_back(e);
            present_.erase(e.pair_id);
        } else {
            kept.push_back(e);
        }
    }
    entries_ = std::move(kept);
    return out;
}

std::vector<std::uint64_t> EbitPool::ids(PairClass cls) const {
    std::vector<std::uint64_t> out;
    for (const auto& e : entries_)
        if (e.cls == cls) out.push_back(e.pair_id);
    return out;
}

// ---------------------------------------------------------------------------
// State machine

std::string_view to_string(FailureReason reason) {
    switch (reason) {
        case FailureReason::NoCoordinator: return "NoCoordinator";
        case FailureReason::NoSatellite: return "NoSatellite";
        case FailureReason::LinkLost: return "LinkLost";
        case FailureReason::InsufficientEntanglement: return "InsufficientEntanglement";
    }
    return "Unknown";
}

namespace {
struct NameOf {
    std::string_view operator()(const state::Idle&) const { return "Idle"; }
    std::string_view operator()(const state::Requested&) const { return "Requested"; }
    std::string_view operator()(const state::Coordinating&) const { return "Coordinating"; }
    std::string_view operator()(const state::Distributing&) const { return "Distributing"; }
    std::string_view operator()(const state::Distilling&) const { return "Distilling"; }
    std::string_view operator()(const state::Teleporting&) const { return "Teleporting"; }
    std::string_view operator()(const state::Done&) const { return "Done"; }
    std::string_view operator()(const state::Failed&) const { return "Failed"; }
};
}  // namespace

std::string_view state_name(const SessionState& s) { return std::visit(NameOf{}, s); }

bool is_terminal(const SessionState& s) {
    return std::holds_alternative<state::Done>(s) || std::holds_alternative<state::Failed>(s);
}

bool transition_allowed(std::string_view from, std::string_view to) {
    if (from == "Done" || from == "Failed") return false;
    if (to == "Failed") return true;
    return (from == "Idle" && to == "Requested") || (from == "Requested" && to == "Coordinating") ||
           (from == "Coordinating" && to == "Distributing") || (from == "Distributing" && to == "Distilling") ||
           (from == "Distilling" && to == "Distilling") || (from == "Distilling" && to == "Teleporting") ||
           (from == "Teleporting" && to == "Done");
}

// ---------------------------------------------------------------------------
// Primitives

DistillOutcome distill(EbitPool& pool_a, EbitPool& pool_b, const DistillationPolicy& policy, double yield_rate,
                       double t, double rtt, std::uint64_t& next_pair_id) {
    if (policy.rounds < 1) throw ProtocolError("distillation needs at least one round");
    if (!(yield_rate >= 0.0 && yield_rate <= 1.0)) throw ProtocolError("yield rate must lie in [0, 1]");
    if (!(rtt >= 0.0)) throw ProtocolError("round-trip time must be >= 0");
    if (pool_a.ids(PairClass::Raw) != pool_b.ids(PairClass::Raw))
        throw ProtocolError("raw pools disagree on pair ids");

    DistillOutcome out;
    out.completion_time = t + static_cast<double>(policy.rounds) * rtt;

    const auto raw_a = pool_a.take_all(PairClass::Raw);
    const auto raw_b = pool_b.take_all(PairClass::Raw);
    out.raw_total = raw_a.size();
    for (std::size_t i = 0; i < raw_a.size(); ++i)
        if (pool_a.valid_at(raw_a[i], out.completion_time) && pool_b.valid_at(raw_b[i], out.completion_time))
            ++out.raw_valid;

    out.distilled = static_cast<std::uint64_t>(std::floor(static_cast<double>(out.raw_valid) * yield_rate));
    for (std::uint64_t k = 0; k < out.distilled; ++k) {
        const PairEntry e{next_pair_id++, out.completion_time, PairClass::Distilled};
        if (!pool_a.deposit(e) || !pool_b.deposit(e)) throw ProtocolError("pool overflow while distilling");
    }
    return out;
}

std::optional<ConsumeRecord> consume_distilled(EbitPool& pool_a, EbitPool& pool_b, double consume_time) {
    while (auto a = pool_a.take_oldest_valid(PairClass::Distilled, consume_time)) {
        const auto b = pool_b.take(a->pair_id);
        if (!b) throw ProtocolError("pair " + std::to_string(a->pair_id) + " missing from peer pool");
        if (!pool_b.valid_at(*b, consume_time)) continue;
        return ConsumeRecord{a->pair_id, a->created_at, consume_time};
    }
    return std::nullopt;
}

TeleportOutcome teleport(EbitPool& pool_a, EbitPool& pool_b, std::uint64_t qubits, double t, double one_way_delay) {
    TeleportOutcome out;
    for (std::uint64_t k = 0; k < qubits; ++k) {
        auto rec = consume_distilled(pool_a, pool_b, t + one_way_delay);
        if (!rec) break;
        out.consumed.push_back(*rec);
        ++out.delivered;
        out.classical_bits += 2;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Network

const GroundStation& Network::station(std::uint32_t id) const {
    for (const auto& s : stations)
        if (s.id == id) return s;
    throw ProtocolError("unknown station " + std::to_string(id));
}

const Satellite& Network::satellite(std::uint32_t id) const {
    for (const auto& s : satellites)
        if (s.id == id) return s;
    throw ProtocolError("unknown satellite " + std::to_string(id));
}

std::vector<Satellite> Network::tier(Tier t) const {
    std::vector<Satellite> out;
    std::copy_if(satellites.begin(), satellites.end(), std::back_inserter(out), [&](const auto& s) { return s.tier == t; });
    return out;
}

// ---------------------------------------------------------------------------
// Protocol

namespace {
std::string node(std::string_view kind, std::uint32_t id) { return std::string(kind) + ":" + std::to_string(id); }
}  // namespace

Protocol::Protocol(Simulator& sim, Network network, TraceSink& sink)
    : sim_(sim), network_(std::move(network)), sink_(sink) {}

Session& Protocol::mut(std::uint64_t id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ProtocolError("unknown session " + std::to_string(id));
    return it->second;
}

const Session& Protocol::session(std::uint64_t id) const {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ProtocolError("unknown session " + std::to_string(id));
    return it->second;
}

void Protocol::trace(std::uint64_t session_id, std::string event, std::vector<TraceField> payload) {
    sink_.write(TraceRecord{sim_.now(), session_id, std::move(event), std::move(payload)});
}

void Protocol::transition(Session& s, SessionState next) {
    const auto from = state_name(s.state);
    const auto to = state_name(next);
    if (!transition_allowed(from, to))
        throw ProtocolError("session " + std::to_string(s.id) + ": illegal transition " + std::string(from) + " -> " +
                            std::string(to));
    std::vector<TraceField> payload{{"from", std::string(from)}, {"to", std::string(to)}};
    if (const auto* f = std::get_if<state::Failed>(&next)) payload.push_back({"reason", std::string(to_string(f->reason))});
    s.state = next;
    s.history.emplace_back(to);
    trace(s.id, "transition", std::move(payload));
}

void Protocol::fail(Session& s, FailureReason reason) { transition(s, state::Failed{reason}); }

Vec3 Protocol::station_pos(std::uint32_t id, double t) const {
    return ground_position(network_.station(id), t, network_.params.earth_rotation);
}

Vec3 Protocol::sat_pos(std::uint32_t id, double t) const { return satellite_position(network_.satellite(id), t); }

double Protocol::one_way_ground_delay(const Session& s, double t) const {
    return radio_delay(ground_chord(network_.station(s.a), network_.station(s.b), t, network_.params.earth_rotation));
}

std::uint64_t Protocol::send_radio(Session& s, std::string_view kind, std::string_view from, std::string_view to,
                                   double distance, std::function<void(Simulator&)> on_arrival) {
    const std::uint64_t msg = next_message_++;
    const double delay = radio_delay(distance);
    const double sent_at = sim_.now();
    trace(s.id, "message_sent",
          {{"message_id", msg},
           {"kind", std::string(kind)},
           {"from", std::string(from)},
           {"to", std::string(to)},
           {"distance_m", distance},
           {"delay_s", delay}});
    const std::uint64_t sid = s.id;
    sim_.schedule(sent_at + delay, std::string("receive:") + std::string(kind),
                  [this, sid, msg, sent_at, delay, kind = std::string(kind), cb = std::move(on_arrival)](Simulator& sim) {
                      trace(sid, "message_received",
                            {{"message_id", msg}, {"kind", kind}, {"sent_at", sent_at}, {"delay_s", delay}});
                      if (cb) cb(sim);
                  });
    return msg;
}

std::uint64_t Protocol::request(std::uint32_t a, std::uint32_t b, std::uint64_t qubits, double t) {
    if (a == b) throw ProtocolError("request endpoints must differ");
    if (qubits < 1) throw ProtocolError("request must ask for at least one qubit");
    if (t < sim_.now()) throw ProtocolError("request time is in the past");
    const auto& sa = network_.station(a);
    const auto& sb = network_.station(b);

    const std::uint64_t id = next_session_++;
    const std::size_t capacity = std::min(sa.memory_capacity, sb.memory_capacity);
    Session s(id, a, b, qubits, EbitPool(a, b, sa.memory_coherence_time, capacity),
              EbitPool(a, b, sb.memory_coherence_time, capacity));
    s.history.emplace_back("Idle");
    sessions_.emplace(id, std::move(s));
    sim_.schedule(t, "request", [this, id](Simulator&) { handle_request(id); });
    return id;
}

void Protocol::handle_request(std::uint64_t id) {
    Session& s = mut(id);
    const double t = sim_.now();
    trace(id, "request", {{"a", std::uint64_t{s.a}}, {"b", std::uint64_t{s.b}}, {"qubits", s.qubits_requested}});

    const Vec3 pa = station_pos(s.a, t);
    std::optional<std::uint32_t> geo;
    double best = 0.0;
    for (const auto& sat : network_.satellites) {
        if (sat.tier != Tier::GEO) continue;
        const double el = elevation(pa, satellite_position(sat, t));
        if (el < network_.params.min_elevation) continue;
        if (!geo || el > best || (el == best && sat.id < *geo)) {
            geo = sat.id;
            best = el;
        }
    }
    if (!geo) {
        fail(s, FailureReason::NoCoordinator);
        return;
    }
    s.geo_id = geo;
    transition(s, state::Requested{s.a, s.b, t});
    const double distance = link_geometry(pa, sat_pos(*geo, t)).distance;
    send_radio(s, "request", node("station", s.a), node("geo", *geo), distance,
               [this, id](Simulator&) { geo_coordinate(id); });
}

void Protocol::geo_coordinate(std::uint64_t id) {
    Session& s = mut(id);
    const double t = sim_.now();
    transition(s, state::Coordinating{*s.geo_id});

    const auto leos = network_.tier(Tier::LEO);
    const auto leo = select_leo(leos, network_.station(s.a), network_.station(s.b), t, network_.params.min_elevation,
                                network_.params.earth_rotation);
    if (!leo) {
        fail(s, FailureReason::NoSatellite);
        return;
    }
    s.leo_id = leo;
    const Vec3 pl = sat_pos(*leo, t);
    trace(id, "leo_selected",
          {{"leo_id", std::uint64_t{*leo}},
           {"elevation_a", elevation(station_pos(s.a, t), pl)},
           {"elevation_b", elevation(station_pos(s.b, t), pl)}});
    const double distance = link_geometry(sat_pos(*s.geo_id, t), pl).distance;
    send_radio(s, "command", node("geo", *s.geo_id), node("leo", *leo), distance,
               [this, id](Simulator&) { leo_acknowledge(id); });
}

void Protocol::leo_acknowledge(std::uint64_t id) {
    Session& s = mut(id);
    transition(s, state::Distributing{*s.leo_id, network_.params.pairs_target});
    leo_distribute(id);
}

void Protocol::leo_distribute(std::uint64_t id) {
    Session& s = mut(id);
    const auto& params = network_.params;
    const auto& dl = network_.downlink;
    const auto& leo = network_.satellite(*s.leo_id);
    const auto& sa = network_.station(s.a);
    const auto& sb = network_.station(s.b);
    const BeamParams beam{leo.aperture_radius, dl.wavelength};
    const auto fixed_a = dl.fixed_eta.find(s.a);
    const auto fixed_b = dl.fixed_eta.find(s.b);

    RngStream rng = sim_.stream(StreamKey{stream_tag::kProtocol, id, 0});
    const double t0 = sim_.now();
    const double spacing = 1.0 / params.pair_rate_hz;

    double rci_sum = 0.0;
    double expected = 0.0;
    double variance = 0.0;
    double last_arrival = t0;

    for (std::uint64_t i = 0; i < params.pairs_target; ++i) {
        const double te = t0 + static_cast<double>(i) * spacing;
        const Vec3 ps = satellite_position(leo, te);
        const Vec3 pa = ground_position(sa, te, params.earth_rotation);
        const Vec3 pb = ground_position(sb, te, params.earth_rotation);
        if (elevation(pa, ps) < params.min_elevation || elevation(pb, ps) < params.min_elevation) {
            s.link_lost = true;
            break;
        }
        const double da = (ps - pa).norm();
        const double db = (ps - pb).norm();
        const Transmittance eta0_a = fixed_a != dl.fixed_eta.end() ? Transmittance(fixed_a->second)
                                                                   : diffraction_transmittance(beam, sa.aperture_radius, da);
        const Transmittance eta0_b = fixed_b != dl.fixed_eta.end() ? Transmittance(fixed_b->second)
                                                                   : diffraction_transmittance(beam, sb.aperture_radius, db);
        const double eta_a = sample_downlink(DownlinkGaussianTail{eta0_a, dl.b}, rng).value();
        const double eta_b = sample_downlink(DownlinkGaussianTail{eta0_b, dl.b}, rng).value();
        const bool arm_a = rng.uniform() < eta_a;
        const bool arm_b = rng.uniform() < eta_b;

        ++s.pairs_attempted;
        const double p = eta_a * eta_b;
        expected += p;
        variance += p * (1.0 - p);
        rci_sum += rci(Transmittance(p));

        const double arrival = te + radio_delay(std::max(da, db));
        last_arrival = std::max(last_arrival, arrival);
        if (!(arm_a && arm_b)) continue;

        ++s.pairs_survived;
        const std::uint64_t pair_id = next_pair_id_++;
        sim_.schedule(arrival, "pair_arrival", [this, id, pair_id](Simulator& sim) {
            Session& ss = mut(id);
            const PairEntry e{pair_id, sim.now(), PairClass::Raw};
            const bool stored = ss.pool_a.size() < ss.pool_a.capacity() && ss.pool_b.size() < ss.pool_b.capacity();
            if (stored) {
                ss.pool_a.deposit(e);
                ss.pool_b.deposit(e);
                ++ss.pairs_deposited;
            }
            trace(id, stored ? "pair_deposited" : "pair_dropped", {{"pair_id", pair_id}, {"created_at", e.created_at}});
        });
    }

    s.yield_rate = params.policy.yield_rate.value_or(
        s.pairs_attempted == 0 ? 0.0 : std::min(1.0, rci_sum / static_cast<double>(s.pairs_attempted)));

    const double mean_p = s.pairs_attempted == 0 ? 0.0 : expected / static_cast<double>(s.pairs_attempted);
    trace(id, "distribution_scheduled",
          {{"leo_id", std::uint64_t{leo.id}},
           {"pairs_attempted", s.pairs_attempted},
           {"pairs_survived", s.pairs_survived},
           {"expected_survivors", expected},
           {"survivor_variance", variance},
           {"mean_survival_probability", mean_p},
           {"yield_rate", s.yield_rate},
           {"link_lost", s.link_lost}});

    sim_.schedule(last_arrival, "distribution_complete", [this, id](Simulator&) { finish_distribution(id); });
}

void Protocol::finish_distribution(std::uint64_t id) {
    Session& s = mut(id);
    trace(id, "distribution_complete",
          {{"pairs_attempted", s.pairs_attempted},
           {"pairs_survived", s.pairs_survived},
           {"pairs_deposited", s.pairs_deposited}});
    if (s.link_lost && s.pairs_deposited < network_.params.min_raw_pairs) {
        fail(s, FailureReason::LinkLost);
        return;
    }
    const auto rounds = network_.params.policy.rounds;
    transition(s, state::Distilling{s.pairs_deposited, rounds});

    const double t = sim_.now();
    const double rtt = 2.0 * one_way_ground_delay(s, t);
    const DistillOutcome outcome =
        distill(s.pool_a, s.pool_b, network_.params.policy, s.yield_rate, t, rtt, next_pair_id_);
    for (std::uint32_t k = 1; k < rounds; ++k)
        sim_.schedule(t + static_cast<double>(k) * rtt, "distill_round", [this, id, k](Simulator&) { distill_round(id, k); });
    sim_.schedule(outcome.completion_time, "distill_complete",
                  [this, id, outcome](Simulator&) { distill_complete(id, outcome); });
}

void Protocol::distill_round(std::uint64_t id, std::uint32_t round) {
    Session& s = mut(id);
    const auto& current = std::get<state::Distilling>(s.state);
    transition(s, state::Distilling{current.raw_count, network_.params.policy.rounds - round});
    trace(id, "distill_round", {{"round", std::uint64_t{round}}});
}

void Protocol::distill_complete(std::uint64_t id, DistillOutcome outcome) {
    Session& s = mut(id);
    s.distilled_created += outcome.distilled;
    trace(id, "distilled",
          {{"raw_total", outcome.raw_total},
           {"raw_valid", outcome.raw_valid},
           {"yield_rate", s.yield_rate},
           {"distilled", outcome.distilled}});
    if (outcome.raw_valid == 0 || outcome.distilled == 0) {
        fail(s, FailureReason::InsufficientEntanglement);
        return;
    }
    transition(s, state::Teleporting{s.qubits_requested});
    s.last_delivery_at = sim_.now();
    teleport_next(id, 0);
}

void Protocol::teleport_next(std::uint64_t id, std::uint64_t index) {
    Session& s = mut(id);
    const double t = sim_.now();
    const double delay = one_way_ground_delay(s, t);
    const auto rec = consume_distilled(s.pool_a, s.pool_b, t + delay);
    if (!rec) {
        sim_.schedule(std::max(t, s.last_delivery_at), "teleport_finish", [this, id](Simulator&) { finish_teleport(id); });
        return;
    }
    ++s.ebits_consumed;
    s.classical_bits += 2;
    std::get<state::Teleporting>(s.state).qubits_remaining = s.qubits_requested - index - 1;
    trace(id, "ebit_consumed",
          {{"pair_id", rec->pair_id}, {"created_at", rec->created_at}, {"consumed_at", rec->consumed_at}, {"qubit", index}});

    const double distance = ground_chord(network_.station(s.a), network_.station(s.b), t, network_.params.earth_rotation);
    send_radio(s, "teleport_corrections", node("station", s.a), node("station", s.b), distance,
               [this, id, index](Simulator&) {
                   Session& ss = mut(id);
                   ++ss.qubits_delivered;
                   trace(id, "qubit_delivered", {{"qubit", index}, {"classical_bits", std::uint64_t{2}}});
               });
    s.last_delivery_at = std::max(s.last_delivery_at, t + delay);

    if (index + 1 < s.qubits_requested) {
        sim_.schedule(t + network_.params.teleport_interval, "teleport_qubit",
                      [this, id, index](Simulator&) { teleport_next(id, index + 1); });
    } else {
        sim_.schedule(s.last_delivery_at, "teleport_finish", [this, id](Simulator&) { finish_teleport(id); });
    }
}

void Protocol::finish_teleport(std::uint64_t id) {
    Session& s = mut(id);
    if (s.qubits_delivered == s.qubits_requested) transition(s, state::Done{s.qubits_delivered});
    else fail(s, FailureReason::InsufficientEntanglement);
}

RunSummary Protocol::summary() const {
    RunSummary out;
    for (const auto& [id, s] : sessions_) {
        ++out.sessions;
        if (std::holds_alternative<state::Done>(s.state)) ++out.sessions_done;
        if (std::holds_alternative<state::Failed>(s.state)) ++out.sessions_failed;
        out.qubits_delivered += s.qubits_delivered;
        out.ebits_consumed += s.ebits_consumed;
        out.pairs_attempted += s.pairs_attempted;
        out.pairs_survived += s.pairs_survived;
    }
    return out;
}

void Protocol::emit_summary(double t) {
    const RunSummary sum = summary();
    sink_.write(TraceRecord{t,
                            0,
                            "summary",
                            {{"sessions", sum.sessions},
                             {"sessions_done", sum.sessions_done},
                             {"sessions_failed", sum.sessions_failed},
                             {"qubits_delivered", sum.qubits_delivered},
                             {"ebits_consumed", sum.ebits_consumed},
                             {"pairs_attempted", sum.pairs_attempted},
                             {"pairs_survived", sum.pairs_survived}}});
}

}  // namespace sqn
