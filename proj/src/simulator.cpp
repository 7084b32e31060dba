#include "ccl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

#include "ccl/event_queue.hpp"

namespace ccl {

ChordNetwork::ChordNetwork(const RingParams& params, unsigned successor_list_size)
    : params_(params), offsets_(params.finger_offsets()), list_size_(successor_list_size) {
    if (list_size_ == 0) {
        throw std::invalid_argument("successor list size must be positive");
    }
}

NodeHandle ChordNetwork::create_node(Key id) {
    const auto h = static_cast<NodeHandle>(nodes_.size());
    NodeState n;
    n.id = id;
    n.fingers.assign(offsets_.size(), kNoNode);
    nodes_.push_back(std::move(n));
    alive_slot_.push_back(alive_.size());
    alive_.push_back(h);
    ring_.emplace(id, h);
    return h;
}

void ChordNetwork::build(std::span<const Key> ids) {
    if (ids.empty()) {
        throw std::invalid_argument("ring needs at least one node");
    }
    nodes_.clear();
    ring_.clear();
    alive_.clear();
    alive_slot_.clear();
    for (Key id : ids) {
        if (id >= params_.keyspace()) {
            throw std::invalid_argument("node id outside the key space");
        }
        if (ring_.count(id) != 0) {
            throw std::invalid_argument("duplicate node id");
        }
        create_node(id);
    }
    for (NodeHandle h = 0; h < nodes_.size(); ++h) {
        NodeState& n = nodes_[h];
        set_successors(n, true_successor_list(n.id));
        for (unsigned k = 2; k <= offsets_.size(); ++k) {
            n.fingers[k - 1] = finger_truth(h, k);
        }
    }
    for (NodeHandle h = 0; h < nodes_.size(); ++h) {
        nodes_[nodes_[h].successors[0]].predecessor = h;
    }
}

void ChordNetwork::build_random(std::uint64_t count, Xoshiro256& rng) {
    if (count == 0 || count > params_.keyspace()) {
        throw std::invalid_argument("node count must be in [1, K]");
    }
    std::vector<Key> ids;
    ids.reserve(count);
    if (count == params_.keyspace()) {
        for (Key id = 0; id < count; ++id) {
            ids.push_back(id);
        }
    } else {
        std::unordered_set<Key> seen;
        while (ids.size() < count) {
            const Key id = rng.below(params_.keyspace());
            if (seen.insert(id).second) {
                ids.push_back(id);
            }
        }
    }
    build(ids);
}

NodeHandle ChordNetwork::random_alive(Xoshiro256& rng) const {
    if (alive_.empty()) {
        throw SimulationError("no live nodes");
    }
    return alive_[rng.below(alive_.size())];
}

NodeHandle ChordNetwork::handle_of(Key id) const {
    auto it = ring_.find(id);
    return it == ring_.end() ? kNoNode : it->second;
}

NodeHandle ChordNetwork::true_successor(Key key) const {
    if (ring_.empty()) {
        return kNoNode;
    }
    auto it = ring_.lower_bound(key % params_.keyspace());
    if (it == ring_.end()) {
        it = ring_.begin();
    }
    return it->second;
}

NodeHandle ChordNetwork::finger_truth(NodeHandle h, unsigned k) const {
    return true_successor((nodes_[h].id + offsets_.at(k - 1)) % params_.keyspace());
}

bool ChordNetwork::successor_wrong(NodeHandle h) const {
    const NodeState& n = nodes_[h];
    return !is_alive(n.successors[0]) || n.successors[0] != finger_truth(h, 1);
}

std::vector<NodeHandle> ChordNetwork::true_successor_list(Key after) const {
    std::vector<NodeHandle> list;
    const std::size_t others = ring_.size() - (ring_.count(after) != 0 ? 1 : 0);
    const std::size_t want = std::min<std::size_t>(list_size_, others);
    auto it = ring_.upper_bound(after);
    while (list.size() < want) {
        if (it == ring_.end()) {
            it = ring_.begin();
        }
        list.push_back(it->second);
        ++it;
    }
    if (list.empty()) {
        list.push_back(ring_.at(after));
    }
    return list;
}

void ChordNetwork::set_successors(NodeState& n, std::vector<NodeHandle> list) {
    n.successors = std::move(list);
    n.fingers[0] = n.successors[0];
}

LookupOutcome ChordNetwork::lookup(NodeHandle origin, Key key) const {
    const Key K = params_.keyspace();
    LookupOutcome out;
    key %= K;
    if (!is_alive(origin)) {
        throw std::invalid_argument("lookup origin is not alive");
    }
    const NodeHandle truth = true_successor(key);
    if (nodes_[origin].id == key) {
        out.ok = true;
        out.owner = origin;
        out.consistent = origin == truth;
        return out;
    }

    std::vector<NodeHandle> known_dead;
    auto is_known_dead = [&](NodeHandle h) {
        return std::find(known_dead.begin(), known_dead.end(), h) != known_dead.end();
    };
    const unsigned max_steps = 8 * static_cast<unsigned>(offsets_.size() + list_size_) + 16;
    NodeHandle cur = origin;
    for (unsigned step = 0; step < max_steps; ++step) {
        const NodeState& n = nodes_[cur];
        const Key to_key = ring_distance(n.id, key, K);

        // Closest preceding pointer: fingers first, then the successor list.
        NodeHandle next = kNoNode;
        Key best = 0;
        for (NodeHandle f : n.fingers) {
            if (f == kNoNode || f == cur || is_known_dead(f)) {
                continue;
            }
            const Key d = ring_distance(n.id, nodes_[f].id, K);
            if (d < to_key && d > best) {
                best = d;
                next = f;
            }
        }
        if (next == kNoNode) {
            for (NodeHandle s : n.successors) {
                if (s == cur || is_known_dead(s)) {
                    continue;
                }
                const Key d = ring_distance(n.id, nodes_[s].id, K);
                if (d < to_key && d > best) {
                    best = d;
                    next = s;
                }
            }
        }
        if (next != kNoNode) {
            if (!nodes_[next].alive) {
                ++out.timeouts;
                known_dead.push_back(next);
                continue;
            }
            ++out.forwards;
            cur = next;
            continue;
        }

        // Nothing precedes the key: it lies between here and the first live
        // successor, which is the owner.
        NodeHandle owner = kNoNode;
        for (NodeHandle s : n.successors) {
            if (is_known_dead(s)) {
                continue;
            }
            if (!nodes_[s].alive) {
                ++out.timeouts;
                known_dead.push_back(s);
                continue;
            }
            owner = s;
            break;
        }
        if (owner == kNoNode) {
            return out;
        }
        if (owner != cur) {
            ++out.forwards;
        }
        out.ok = true;
        out.owner = owner;
        out.consistent = owner == truth;
        return out;
    }
    return out;
}

void ChordNetwork::fail(NodeHandle h) {
    NodeState& n = nodes_.at(h);
    if (!n.alive) {
        throw std::invalid_argument("node already failed");
    }
    n.alive = false;
    ring_.erase(n.id);
    const std::size_t slot = alive_slot_[h];
    const NodeHandle last = alive_.back();
    alive_[slot] = last;
    alive_slot_[last] = slot;
    alive_.pop_back();
}

NodeHandle ChordNetwork::join(Key id, NodeHandle bootstrap) {
    if (ring_.count(id) != 0) {
        throw std::invalid_argument("join at an occupied id");
    }
    NodeHandle owner = kNoNode;
    if (is_alive(bootstrap)) {
        const LookupOutcome found = lookup(bootstrap, id);
        if (found.ok) {
            owner = found.owner;
        }
    }
    if (owner == kNoNode) {
        owner = true_successor(id);
    }
    const NodeHandle h = create_node(id);
    NodeState& n = nodes_[h];
    const NodeState& o = nodes_[owner];
    std::vector<NodeHandle> list{owner};
    for (NodeHandle s : o.successors) {
        if (list.size() >= list_size_) {
            break;
        }
        if (s != h && s != owner) {
            list.push_back(s);
        }
    }
    set_successors(n, std::move(list));
    for (std::size_t k = 1; k < n.fingers.size(); ++k) {
        n.fingers[k] = o.fingers[k];
    }
    NodeState& own = nodes_[owner];
    const Key K = params_.keyspace();
    if (!is_alive(own.predecessor) ||
        ring_distance(nodes_[own.predecessor].id, id, K) <
            ring_distance(nodes_[own.predecessor].id, own.id, K)) {
        own.predecessor = h;
    }
    return h;
}

bool ChordNetwork::stabilize(NodeHandle h, StabilizeMode mode) {
    const NodeHandle before = nodes_[h].successors[0];
    const Key K = params_.keyspace();
    if (mode == StabilizeMode::oracle) {
        set_successors(nodes_[h], true_successor_list(nodes_[h].id));
    } else {
        NodeState& n = nodes_[h];
        NodeHandle x = kNoNode;
        for (NodeHandle s : n.successors) {
            if (is_alive(s)) {
                x = s;
                break;
            }
        }
        if (x == kNoNode) {
            x = finger_truth(h, 1);
        }
        const NodeHandle p = nodes_[x].predecessor;
        if (is_alive(p) && p != h &&
            ring_distance(n.id, nodes_[p].id, K) < ring_distance(n.id, nodes_[x].id, K)) {
            x = p;
        }
        std::vector<NodeHandle> list{x};
        for (NodeHandle s : nodes_[x].successors) {
            if (list.size() >= list_size_) {
                break;
            }
            if (s != h && s != x) {
                list.push_back(s);
            }
        }
        set_successors(n, std::move(list));
    }
    NodeState& succ = nodes_[nodes_[h].successors[0]];
    if (nodes_[h].successors[0] != h &&
        (!is_alive(succ.predecessor) ||
         ring_distance(nodes_[succ.predecessor].id, nodes_[h].id, K) <
             ring_distance(nodes_[succ.predecessor].id, succ.id, K))) {
        succ.predecessor = h;
    }
    return nodes_[h].successors[0] != before;
}

void ChordNetwork::refresh_finger(NodeHandle h, unsigned k) {
    if (k == 1) {
        stabilize(h, StabilizeMode::oracle);
        return;
    }
    nodes_.at(h).fingers.at(k - 1) = finger_truth(h, k);
}

bool ChordNetwork::correct_finger(NodeHandle target, unsigned k) {
    if (k == 1) {
        return false;
    }
    const NodeHandle truth = finger_truth(target, k);
    NodeHandle& finger = nodes_.at(target).fingers.at(k - 1);
    if (finger == truth) {
        return false;
    }
    finger = truth;
    return true;
}

void SimConfig::validate() const {
    maintenance.validate();
    if (!(failure_rate >= 0.0) || !std::isfinite(failure_rate)) {
        throw std::invalid_argument("failure rate must be finite and >= 0");
    }
    if (!(measure_time > 0.0) || !(min_warmup_time >= 0.0)) {
        throw std::invalid_argument("measure time must be > 0 and warmup time >= 0");
    }
    if (!(probe_rate > 0.0) || !(snapshot_rate > 0.0)) {
        throw std::invalid_argument("probe and snapshot rates must be positive");
    }
    if (batches < 2) {
        throw std::invalid_argument("need at least two batches for a confidence interval");
    }
    if (successor_list_size == 0) {
        throw std::invalid_argument("successor list size must be positive");
    }
    if (ring.nodes() >= ring.keyspace() && failure_rate > 0.0) {
        throw std::invalid_argument("a churning ring needs free ids (N < K)");
    }
}

namespace {

enum class EventKind : std::uint8_t { join, fail, maintain, probe, snapshot };
constexpr std::size_t kEventKinds = 5;

struct Event {
    EventKind kind;
    std::uint64_t generation;
};

class HopAccumulator {
public:
    explicit HopAccumulator(std::size_t batches) : sums_(batches, 0.0), counts_(batches, 0) {}

    void record(std::size_t batch, const LookupOutcome& out) {
        ++lookups_;
        if (!out.ok) {
            ++failed_;
            return;
        }
        if (!out.consistent) {
            ++inconsistent_;
        }
        sums_[batch] += out.hops();
        counts_[batch] += 1;
        forwards_ += out.forwards;
        timeouts_ += out.timeouts;
    }

    void finish(SimResult& r) const {
        r.lookups = lookups_;
        r.failed_lookups = failed_;
        r.inconsistent_lookups = inconsistent_;
        const std::uint64_t ok = lookups_ - failed_;
        r.failure_fraction = lookups_ ? static_cast<double>(failed_) / lookups_ : 0.0;
        r.outside_validity = r.failure_fraction > 0.005;
        if (ok == 0) {
            return;
        }
        double total = 0.0;
        for (double s : sums_) {
            total += s;
        }
        r.mean_hops = total / ok;
        r.mean_forwards = static_cast<double>(forwards_) / ok;
        r.mean_timeouts = static_cast<double>(timeouts_) / ok;

        std::vector<double> means;
        for (std::size_t b = 0; b < sums_.size(); ++b) {
            if (counts_[b] > 0) {
                means.push_back(sums_[b] / counts_[b]);
            }
        }
        if (means.size() < 2) {
            r.hop_ci_halfwidth = std::numeric_limits<double>::infinity();
            return;
        }
        double mean = 0.0;
        for (double m : means) {
            mean += m;
        }
        mean /= means.size();
        double ss = 0.0;
        for (double m : means) {
            ss += (m - mean) * (m - mean);
        }
        const double n = static_cast<double>(means.size());
        const double se = std::sqrt(ss / (n - 1.0) / n);
        const boost::math::students_t dist(n - 1.0);
        r.hop_ci_halfwidth = boost::math::quantile(dist, 0.975) * se;
    }

private:
    std::vector<double> sums_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t lookups_ = 0;
    std::uint64_t failed_ = 0;
    std::uint64_t inconsistent_ = 0;
    std::uint64_t forwards_ = 0;
    std::uint64_t timeouts_ = 0;
};

class StateSampler {
public:
    explicit StateSampler(unsigned finger_count)
        : dead_(finger_count, 0), s2_(finger_count, 0), s2_wrong_(finger_count, 0) {}

    void sample(const ChordNetwork& net, SimResult& r) {
        const unsigned M = static_cast<unsigned>(dead_.size());
        std::uint64_t s1 = 0;
        std::uint64_t s2_total = 0;
        for (NodeHandle h : net.alive_nodes()) {
            const NodeState& n = net.node(h);
            for (unsigned k = 0; k < M; ++k) {
                if (!net.is_alive(n.fingers[k])) {
                    ++dead_[k];
                }
            }
            const bool wrong = net.successor_wrong(h);
            if (wrong) {
                ++wrong_;
                if (!net.is_alive(n.successors[0])) {
                    ++wrong_dead_;
                }
            }
            if (n.phase == MaintPhase::s1) {
                ++s1;
                s1_wrong_ += wrong;
            } else {
                ++s2_total;
                ++s2_[n.next_message - 1];
                s2_wrong_[n.next_message - 1] += wrong;
            }
        }
        const std::size_t pop = net.population();
        s1_ += s1;
        nodes_ += pop;
        pop_sum_ += static_cast<double>(pop);
        pop_sq_ += static_cast<double>(pop) * static_cast<double>(pop);
        if (samples_ == 0) {
            r.population_min = r.population_max = pop;
        }
        r.population_min = std::min(r.population_min, pop);
        r.population_max = std::max(r.population_max, pop);
        const double sum = static_cast<double>(s1 + s2_total) / static_cast<double>(pop);
        r.max_state_sum_error = std::max(r.max_state_sum_error, std::fabs(sum - 1.0));
        ++samples_;
    }

    void finish(SimResult& r) const {
        const unsigned M = static_cast<unsigned>(dead_.size());
        r.snapshots = samples_;
        r.dead_fingers.assign(M, 0.0);
        r.p_s2.assign(M, 0.0);
        r.w1_prime_by_substate.assign(M, 0.0);
        if (samples_ == 0 || nodes_ == 0) {
            return;
        }
        const double total = static_cast<double>(nodes_);
        double bulk = 0.0;
        for (unsigned k = 0; k < M; ++k) {
            r.dead_fingers[k] = dead_[k] / total;
            if (k > 0) {
                bulk += r.dead_fingers[k];
            }
        }
        r.dead_fingers_bulk = M > 1 ? bulk / (M - 1) : r.dead_fingers[0];
        std::uint64_t s2_total = 0;
        std::uint64_t s2_wrong_total = 0;
        for (unsigned i = 0; i < M; ++i) {
            r.p_s2[i] = s2_[i] / total;
            r.w1_prime_by_substate[i] =
                s2_[i] ? static_cast<double>(s2_wrong_[i]) / static_cast<double>(s2_[i]) : 0.0;
            s2_total += s2_[i];
            s2_wrong_total += s2_wrong_[i];
        }
        r.w = wrong_ / total;
        r.w_dead = wrong_dead_ / total;
        r.p_s1 = s1_ / total;
        r.w1 = s1_ ? static_cast<double>(s1_wrong_) / static_cast<double>(s1_) : 0.0;
        r.w1_prime = s2_total ? static_cast<double>(s2_wrong_total) / static_cast<double>(s2_total)
                              : 0.0;
        const double n = static_cast<double>(samples_);
        r.population_mean = pop_sum_ / n;
        r.population_sd = std::sqrt(std::max(0.0, pop_sq_ / n - r.population_mean * r.population_mean));
    }

private:
    std::vector<double> dead_;
    std::vector<std::uint64_t> s2_;
    std::vector<std::uint64_t> s2_wrong_;
    double wrong_ = 0.0;
    double wrong_dead_ = 0.0;
    std::uint64_t s1_ = 0;
    std::uint64_t s1_wrong_ = 0;
    std::uint64_t nodes_ = 0;
    double pop_sum_ = 0.0;
    double pop_sq_ = 0.0;
    std::uint64_t samples_ = 0;
};

class Simulation {
public:
    explicit Simulation(const SimConfig& cfg)
        : cfg_(cfg), rng_(cfg.seed), net_(cfg.ring, cfg.successor_list_size),
          hops_(cfg.batches), states_(cfg.ring.finger_count()) {
        net_.build_random(cfg.ring.nodes(), rng_);
        M_ = cfg.ring.finger_count();
        if (cfg.maintenance.is_periodic()) {
            maintenance_weight_ = 1.0;
        } else {
            const auto& coc = cfg.maintenance.as_coc();
            maintenance_weight_ = std::max(coc.alpha, coc.a + coc.c);
        }
    }

    SimResult run() {
        if (cfg_.failure_rate == 0.0) {
            run_static();
        } else {
            run_churn();
        }
        hops_.finish(result_);
        states_.finish(result_);
        return result_;
    }

private:
    void run_static() {
        const std::uint64_t probes =
            cfg_.measure_lookups ? cfg_.measure_lookups : 100 * cfg_.ring.nodes();
        const std::uint64_t per_batch = std::max<std::uint64_t>(1, probes / cfg_.batches);
        for (std::uint64_t i = 0; i < probes; ++i) {
            probe(std::min<std::size_t>(i / per_batch, cfg_.batches - 1));
        }
        states_.sample(net_, result_);
    }

    void run_churn() {
        const double lf = cfg_.failure_rate;
        const double N0 = static_cast<double>(cfg_.ring.nodes());
        join_rate_ = lf * N0;
        const std::uint64_t warmup_events =
            cfg_.warmup_events ? cfg_.warmup_events : 20 * cfg_.ring.nodes();

        schedule(EventKind::join, 0.0);
        schedule(EventKind::fail, 0.0);
        schedule(EventKind::maintain, 0.0);

        bool measuring = false;
        double measure_end = 0.0;
        std::uint64_t churn_events = 0;
        while (!queue_.empty()) {
            const auto entry = queue_.pop();
            const Event ev = entry.payload;
            const std::size_t kind = static_cast<std::size_t>(ev.kind);
            if (ev.generation != generation_[kind]) {
                continue;
            }
            now_ = entry.time;
            if (measuring && now_ >= measure_end) {
                break;
            }
            if (cfg_.max_events && result_.events >= cfg_.max_events) {
                if (!measuring) {
                    throw SimulationError("event budget exhausted before warmup completed");
                }
                break;
            }
            ++result_.events;
            switch (ev.kind) {
                case EventKind::join:
                    do_join();
                    schedule(EventKind::join, now_);
                    reschedule_population_dependent();
                    ++churn_events;
                    break;
                case EventKind::fail:
                    do_fail();
                    reschedule_population_dependent();
                    ++churn_events;
                    break;
                case EventKind::maintain:
                    do_maintenance();
                    schedule(EventKind::maintain, now_);
                    ++churn_events;
                    break;
                case EventKind::probe:
                    probe(std::min<std::size_t>(
                        static_cast<std::size_t>((now_ - result_.warmup_end_time) / batch_length_),
                        cfg_.batches - 1));
                    schedule(EventKind::probe, now_);
                    break;
                case EventKind::snapshot:
                    states_.sample(net_, result_);
                    schedule(EventKind::snapshot, now_);
                    break;
            }
            if (!measuring && churn_events >= warmup_events && now_ >= cfg_.min_warmup_time / lf) {
                measuring = true;
                result_.warmup_end_time = now_;
                measure_end = now_ + cfg_.measure_time / lf;
                batch_length_ = (cfg_.measure_time / lf) / static_cast<double>(cfg_.batches);
                schedule(EventKind::probe, now_);
                schedule(EventKind::snapshot, now_);
            }
        }
        result_.end_time = now_;
    }

    double rate(EventKind kind) const {
        const double pop = static_cast<double>(net_.population());
        const double lf = cfg_.failure_rate;
        switch (kind) {
            case EventKind::join:
                return join_rate_;
            case EventKind::fail:
                return lf * pop;
            case EventKind::maintain:
                return cfg_.maintenance.r * lf * maintenance_weight_ * pop;
            case EventKind::probe:
                return cfg_.probe_rate * lf * pop;
            case EventKind::snapshot:
                return cfg_.snapshot_rate * lf;
        }
        return 0.0;
    }

    void schedule(EventKind kind, double from) {
        const std::size_t i = static_cast<std::size_t>(kind);
        const double r = rate(kind);
        scheduled_[i] = true;
        if (r <= 0.0) {
            return;
        }
        queue_.push(from + rng_.exponential(r), Event{kind, generation_[i]});
    }

    // Pending clocks whose aggregate rate scales with the population are
    // discarded and redrawn; exact because the clocks are memoryless.
    void reschedule_population_dependent() {
        for (EventKind kind : {EventKind::fail, EventKind::maintain, EventKind::probe}) {
            const std::size_t i = static_cast<std::size_t>(kind);
            if (!scheduled_[i]) {
                continue;
            }
            ++generation_[i];
            schedule(kind, now_);
        }
    }

    void do_join() {
        if (net_.population() == 0) {
            throw SimulationError("population reached zero");
        }
        const Key K = cfg_.ring.keyspace();
        if (net_.population() >= K) {
            return;
        }
        Key id = rng_.below(K);
        while (net_.handle_of(id) != kNoNode) {
            id = rng_.below(K);
        }
        const NodeHandle bootstrap = net_.random_alive(rng_);
        net_.join(id, bootstrap);
        ++result_.joins;
    }

    void do_fail() {
        net_.fail(net_.random_alive(rng_));
        ++result_.failures;
        if (net_.population() == 0) {
            throw SimulationError("population reached zero at t=" + std::to_string(now_));
        }
    }

    void do_maintenance() {
        const NodeHandle h = net_.random_alive(rng_);
        if (cfg_.maintenance.is_periodic()) {
            const double beta = cfg_.maintenance.as_periodic().beta;
            if (rng_.uniform() < beta) {
                net_.stabilize(h, cfg_.stabilize_mode);
            } else {
                const auto k = static_cast<unsigned>(1 + rng_.below(M_));
                if (k == 1) {
                    net_.stabilize(h, cfg_.stabilize_mode);
                } else {
                    net_.refresh_finger(h, k);
                }
            }
            return;
        }

        const auto& coc = cfg_.maintenance.as_coc();
        const double x = rng_.uniform() * maintenance_weight_;
        NodeState& n = net_.mutable_node(h);
        if (n.phase == MaintPhase::s1) {
            if (x < coc.alpha) {
                const NodeHandle old = n.successors[0];
                if (net_.stabilize(h, cfg_.stabilize_mode)) {
                    start_episode(h, old);
                }
            }
            return;
        }
        if (x < coc.a) {
            const NodeHandle old = n.successors[0];
            if (net_.stabilize(h, cfg_.stabilize_mode)) {
                start_episode(h, old);
            }
        } else if (x < coc.a + coc.c) {
            send_correction(h);
        }
    }

    void start_episode(NodeHandle h, NodeHandle stale) {
        NodeState& n = net_.mutable_node(h);
        n.phase = MaintPhase::s2;
        n.next_message = 1;
        n.messages_sent = 0;
        n.stale_successor = stale;
    }

    void send_correction(NodeHandle h) {
        const Key K = cfg_.ring.keyspace();
        const unsigned k = net_.node(h).next_message;
        const Key base_id = cfg_.correction_target == CorrectionTarget::detector
                                ? net_.node(h).id
                                : net_.node(net_.node(h).stale_successor).id;
        const Key offset = net_.offsets()[k - 1];
        const Key key = (base_id + K - offset % K) % K;
        const LookupOutcome out = net_.lookup(h, key);
        ++result_.correction_messages;
        if (out.ok) {
            if (net_.correct_finger(out.owner, k)) {
                ++result_.corrections_applied;
            }
        } else {
            ++result_.correction_lookup_failures;
        }
        NodeState& n = net_.mutable_node(h);
        ++n.messages_sent;
        ++n.next_message;
        if (n.next_message > M_) {
            if (n.messages_sent != M_) {
                ++result_.episode_message_mismatches;
            }
            n.phase = MaintPhase::s1;
            n.next_message = 1;
            n.stale_successor = kNoNode;
            ++result_.completed_episodes;
        }
    }

    void probe(std::size_t batch) {
        const NodeHandle origin = net_.random_alive(rng_);
        const Key key = rng_.below(cfg_.ring.keyspace());
        hops_.record(batch, net_.lookup(origin, key));
    }

    SimConfig cfg_;
    Xoshiro256 rng_;
    ChordNetwork net_;
    HopAccumulator hops_;
    StateSampler states_;
    SimResult result_;
    EventQueue<Event> queue_;
    std::uint64_t generation_[kEventKinds] = {};
    bool scheduled_[kEventKinds] = {};
    unsigned M_ = 0;
    double maintenance_weight_ = 1.0;
    double join_rate_ = 0.0;
    double now_ = 0.0;
    double batch_length_ = 1.0;
};

}  // namespace

SimResult run_simulation(const SimConfig& config) {
    config.validate();
    Simulation sim(config);
    return sim.run();
}

}  // namespace ccl
