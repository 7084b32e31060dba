#pragma once
// Key-space arithmetic and the internode-interval probability family.
//
// Nodes join and leave independently and uniformly, so the gap between two
// adjacent nodes is geometric with parameter 1 - rho, rho = (K - N) / K.
// Everything downstream (cost recursions, backup-finger probabilities) is
// built from the three quantities defined here.

#include <cstdint>
#include <vector>

namespace ccl {

using Key = std::uint64_t;

class RingParams {
public:
    // keyspace must be a power of base; 1 <= nodes <= keyspace.
    static RingParams create(Key keyspace, std::uint64_t nodes, unsigned base = 2);
    static RingParams from_bits(unsigned keyspace_bits, std::uint64_t nodes, unsigned base = 2);

    Key keyspace() const { return keyspace_; }
    std::uint64_t nodes() const { return nodes_; }
    unsigned base() const { return base_; }

    // Number of base-b digits in a key, log_b(K).
    unsigned digits() const { return digits_; }
    // (b - 1) * log_b(K); equals log2(K) for b = 2.
    unsigned finger_count() const { return (base_ - 1) * digits_; }

    double density() const;       // rho
    double occupancy() const;     // 1 - rho = N / K, exact
    double log_density() const { return log_rho_; }

    // rho^x evaluated as exp(x log rho).
    double density_pow(double x) const;

    // Clockwise offsets j * b^l (j in [1, b-1], l in [0, digits)) in ascending
    // order. Entry k-1 is the start offset of finger k.
    std::vector<Key> finger_offsets() const;

    unsigned keyspace_bits() const;

private:
    RingParams(Key keyspace, std::uint64_t nodes, unsigned base, unsigned digits);

    Key keyspace_;
    std::uint64_t nodes_;
    unsigned base_;
    unsigned digits_;
    double log_rho_;
};

// Clockwise distance from `from` to `to` on a ring of `keyspace` keys.
inline Key ring_distance(Key from, Key to, Key keyspace) {
    return (to + keyspace - from) % keyspace;
}

// P(x) = rho^(x-1) (1 - rho): probability that adjacent nodes are x keys apart.
double interval_pdf(std::int64_t x, const RingParams& p);

// a(x) = 1 - rho^x: probability of at least one node among x consecutive keys.
double at_least_one(std::int64_t x, const RingParams& p);

// b_i = rho^i (1 - rho): the first node after a key sits i keys further on.
double first_node_at(std::int64_t i, const RingParams& p);

// bc(i, x) = b_i / a(x), conditioned on the x-key interval being occupied.
double first_node_conditional(std::int64_t i, std::int64_t x, const RingParams& p);

}  // namespace ccl
