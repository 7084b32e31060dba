#pragma once
// Discrete-event Chord ring under Poisson churn. Failures are silent, joins
// copy their successor's (possibly stale) fingers, and lookups pay one hop per
// forward and one per timeout on a dead contact.

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccl/ring_model.hpp"
#include "ccl/rng.hpp"
#include "ccl/steady_state.hpp"

namespace ccl {

using NodeHandle = std::uint32_t;
inline constexpr NodeHandle kNoNode = std::numeric_limits<NodeHandle>::max();

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class MaintPhase { s1, s2 };

// Key used by the k-th correction lookup: own id, or the id of the stale
// successor that triggered the S2 episode.
enum class CorrectionTarget { detector, stale_successor };

// oracle: adopt the true successor and the next S live nodes.
// protocol: adopt the first live successor-list entry (or its predecessor if
// that lies in between), copy the list from it and notify it.
enum class StabilizeMode { oracle, protocol };

struct NodeState {
    Key id = 0;
    bool alive = true;
    // fingers[k-1] is finger k; fingers[0] always equals successors[0].
    std::vector<NodeHandle> fingers;
    std::vector<NodeHandle> successors;
    NodeHandle predecessor = kNoNode;
    MaintPhase phase = MaintPhase::s1;
    unsigned next_message = 1;  // 1..M while in S2
    NodeHandle stale_successor = kNoNode;
    unsigned messages_sent = 0;  // correction messages in the current S2 episode
};

struct LookupOutcome {
    bool ok = false;
    NodeHandle owner = kNoNode;
    unsigned forwards = 0;
    unsigned timeouts = 0;
    bool consistent = false;  // owner is the true current owner of the key

    unsigned hops() const { return forwards + timeouts; }
};

class ChordNetwork {
public:
    ChordNetwork(const RingParams& params, unsigned successor_list_size = 4);

    // Fresh ring on the given distinct ids with fully correct tables.
    void build(std::span<const Key> ids);
    // Fresh ring on `count` uniform random distinct ids.
    void build_random(std::uint64_t count, Xoshiro256& rng);

    const RingParams& params() const { return params_; }
    std::span<const Key> offsets() const { return offsets_; }
    unsigned successor_list_size() const { return list_size_; }

    std::size_t population() const { return alive_.size(); }
    std::span<const NodeHandle> alive_nodes() const { return alive_; }
    const NodeState& node(NodeHandle h) const { return nodes_.at(h); }
    NodeState& mutable_node(NodeHandle h) { return nodes_.at(h); }
    bool is_alive(NodeHandle h) const { return h != kNoNode && nodes_[h].alive; }
    NodeHandle random_alive(Xoshiro256& rng) const;
    // kNoNode when the id is not occupied.
    NodeHandle handle_of(Key id) const;

    // First live node at or after `key` (the key's owner).
    NodeHandle true_successor(Key key) const;
    NodeHandle finger_truth(NodeHandle h, unsigned k) const;
    bool successor_wrong(NodeHandle h) const;

    LookupOutcome lookup(NodeHandle origin, Key key) const;

    void fail(NodeHandle h);
    // Join at an unoccupied id via a lookup from `bootstrap`.
    NodeHandle join(Key id, NodeHandle bootstrap);

    // Returns true when the first successor changed.
    bool stabilize(NodeHandle h, StabilizeMode mode);
    void refresh_finger(NodeHandle h, unsigned k);
    // Corrects finger k of `target` if stale. Returns true when it changed.
    // Finger 1 is the successor pointer and is left to stabilisation.
    bool correct_finger(NodeHandle target, unsigned k);

private:
    void set_successors(NodeState& n, std::vector<NodeHandle> list);
    std::vector<NodeHandle> true_successor_list(Key after) const;
    NodeHandle create_node(Key id);

    RingParams params_;
    std::vector<Key> offsets_;
    unsigned list_size_;
    std::vector<NodeState> nodes_;
    std::map<Key, NodeHandle> ring_;
    std::vector<NodeHandle> alive_;
    std::vector<std::size_t> alive_slot_;
};

struct SimConfig {
    RingParams ring = RingParams::from_bits(20, 1000);
    MaintenanceConfig maintenance = MaintenanceConfig::periodic(0.5, 100.0);
    std::uint64_t seed = 1;

    double failure_rate = 1.0;  // lambda_f per node; 0 gives a static ring
    // Joins arrive at failure_rate * N overall so the population is stationary.
    std::uint64_t warmup_events = 0;   // 0 means 20 N
    double min_warmup_time = 2.0;      // in units of 1 / lambda_f
    double measure_time = 5.0;         // in units of 1 / lambda_f
    std::uint64_t measure_lookups = 0;  // static rings: number of probes (0 means 100 N)
    std::uint64_t max_events = 0;       // 0 means unlimited
    double probe_rate = 10.0;          // lookups per node per unit time
    double snapshot_rate = 20.0;       // state samples per unit time
    std::size_t batches = 20;          // batch means for the hop CI

    unsigned successor_list_size = 4;
    CorrectionTarget correction_target = CorrectionTarget::detector;
    StabilizeMode stabilize_mode = StabilizeMode::oracle;

    void validate() const;
};

struct SimResult {
    double mean_hops = 0.0;  // forwards + timeouts over successful lookups
    double hop_ci_halfwidth = 0.0;
    double mean_forwards = 0.0;
    double mean_timeouts = 0.0;
    std::uint64_t lookups = 0;
    std::uint64_t failed_lookups = 0;
    std::uint64_t inconsistent_lookups = 0;
    double failure_fraction = 0.0;
    bool outside_validity = false;  // failure fraction above 0.5%

    std::vector<double> dead_fingers;  // time-averaged f_k, k = 1..M
    double dead_fingers_bulk = 0.0;    // mean over k >= 2
    double w = 0.0;                    // wrong first successor, all nodes
    double w_dead = 0.0;               // ... of which the successor is dead
    double w1 = 0.0;                   // among S1 nodes
    double w1_prime = 0.0;             // among S2 nodes
    double p_s1 = 1.0;
    std::vector<double> p_s2;          // P(S2^i), i = 1..M
    std::vector<double> w1_prime_by_substate;
    double max_state_sum_error = 0.0;  // |P_S1 + sum P_S2^i - 1| over samples

    double population_mean = 0.0;
    double population_sd = 0.0;
    std::size_t population_min = 0;
    std::size_t population_max = 0;
    std::uint64_t snapshots = 0;

    std::uint64_t events = 0;
    double warmup_end_time = 0.0;
    double end_time = 0.0;
    std::uint64_t joins = 0;
    std::uint64_t failures = 0;
    std::uint64_t correction_messages = 0;
    std::uint64_t correction_lookup_failures = 0;
    std::uint64_t corrections_applied = 0;
    std::uint64_t completed_episodes = 0;
    std::uint64_t episode_message_mismatches = 0;
};

SimResult run_simulation(const SimConfig& config);

}  // namespace ccl
