#pragma once

#include <cstdint>
#include <queue>
#include <vector>

namespace ccl {

// Min-heap of timed events. Equal times pop in insertion order.
template <class Payload>
class EventQueue {
public:
    struct Entry {
        double time;
        std::uint64_t sequence;
        Payload payload;
    };

    void push(double time, Payload payload) {
        heap_.push(Entry{time, next_sequence_++, std::move(payload)});
    }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    const Entry& top() const { return heap_.top(); }

    Entry pop() {
        Entry e = heap_.top();
        heap_.pop();
        return e;
    }

private:
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.time != b.time) {
                return a.time > b.time;
            }
            return a.sequence > b.sequence;
        }
    };

    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t next_sequence_ = 0;
};

}  // namespace ccl
