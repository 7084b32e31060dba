#include "ccl/ring_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ccl {

namespace {

unsigned exact_log(Key value, unsigned base) {
    unsigned digits = 0;
    while (value > 1) {
        if (value % base != 0) {
            return 0;
        }
        value /= base;
        ++digits;
    }
    return digits;
}

}  // namespace

RingParams::RingParams(Key keyspace, std::uint64_t nodes, unsigned base, unsigned digits)
    : keyspace_(keyspace), nodes_(nodes), base_(base), digits_(digits) {
    if (nodes_ == keyspace_) {
        log_rho_ = -std::numeric_limits<double>::infinity();
    } else {
        log_rho_ = std::log1p(-static_cast<double>(nodes_) / static_cast<double>(keyspace_));
    }
}

RingParams RingParams::create(Key keyspace, std::uint64_t nodes, unsigned base) {
    if (base < 2) {
        throw std::invalid_argument("base must be >= 2");
    }
    if (keyspace < 2) {
        throw std::invalid_argument("keyspace must be >= 2");
    }
    if (nodes < 1 || nodes > keyspace) {
        throw std::invalid_argument("node count must lie in [1, keyspace], got " +
                                    std::to_string(nodes));
    }
    const unsigned digits = exact_log(keyspace, base);
    if (digits == 0) {
        throw std::invalid_argument("keyspace " + std::to_string(keyspace) +
                                    " is not a power of base " + std::to_string(base));
    }
    return RingParams(keyspace, nodes, base, digits);
}

RingParams RingParams::from_bits(unsigned keyspace_bits, std::uint64_t nodes, unsigned base) {
    if (keyspace_bits == 0 || keyspace_bits > 40) {
        throw std::invalid_argument("keyspace bits must lie in [1, 40]");
    }
    return create(Key{1} << keyspace_bits, nodes, base);
}

double RingParams::density() const {
    return static_cast<double>(keyspace_ - nodes_) / static_cast<double>(keyspace_);
}

double RingParams::occupancy() const {
    return static_cast<double>(nodes_) / static_cast<double>(keyspace_);
}

double RingParams::density_pow(double x) const {
    if (x == 0.0) {
        return 1.0;
    }
    if (std::isinf(log_rho_)) {
        return 0.0;
    }
    return std::exp(x * log_rho_);
}

std::vector<Key> RingParams::finger_offsets() const {
    std::vector<Key> offsets;
    offsets.reserve(finger_count());
    Key scale = 1;
    for (unsigned level = 0; level < digits_; ++level) {
        for (unsigned j = 1; j < base_; ++j) {
            offsets.push_back(j * scale);
        }
        scale *= base_;
    }
    return offsets;
}

unsigned RingParams::keyspace_bits() const {
    unsigned bits = 0;
    for (Key k = keyspace_; k > 1; k >>= 1) {
        ++bits;
    }
    return bits;
}

double interval_pdf(std::int64_t x, const RingParams& p) {
    if (x <= 0) {
        throw std::domain_error("interval_pdf: gap must be >= 1");
    }
    return p.density_pow(static_cast<double>(x - 1)) * p.occupancy();
}

double at_least_one(std::int64_t x, const RingParams& p) {
    if (x < 0) {
        throw std::domain_error("at_least_one: interval length must be >= 0");
    }
    if (x == 0) {
        return 0.0;
    }
    if (std::isinf(p.log_density())) {
        return 1.0;
    }
    return -std::expm1(static_cast<double>(x) * p.log_density());
}

double first_node_at(std::int64_t i, const RingParams& p) {
    if (i < 0) {
        throw std::domain_error("first_node_at: offset must be >= 0");
    }
    return p.density_pow(static_cast<double>(i)) * p.occupancy();
}

double first_node_conditional(std::int64_t i, std::int64_t x, const RingParams& p) {
    if (x <= 0) {
        throw std::domain_error("first_node_conditional: empty interval has probability 0");
    }
    if (i < 0 || i >= x) {
        throw std::domain_error("first_node_conditional: offset must lie in [0, x-1]");
    }
    return first_node_at(i, p) / at_least_one(x, p);
}

}  // namespace ccl
