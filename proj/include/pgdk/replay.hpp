#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "pgdk/koopman.hpp"
#include "pgdk/numerics.hpp"

namespace pgdk {

// One observed tuple {x_t, u_t, c_t, x_{t+1}}.
struct Transition {
    Vector x;
    Vector u;
    double cost = 0.0;
    Vector x_next;
};

// Bounded FIFO experience store with seeded uniform sampling without
// replacement. Single-threaded access: the trainer alternates push and
// sample.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 100000, std::uint64_t seed = 0);

    void push(const Transition& t);
    // Uniform without replacement; columns of the batch keep tuple pairing.
    DataBatch sample_batch(Eigen::Index n_samples);

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return items_[i]; }

    // One transition per line: x..., u..., cost, x_next...; a leading
    // "# n m" header records the dimensions.
    void dump_csv(const std::string& path) const;
    static std::vector<Transition> load_dump(const std::string& path);

private:
    std::size_t capacity_;
    std::deque<Transition> items_;
    std::mt19937_64 rng_;
    Eigen::Index n_ = -1;
    Eigen::Index m_ = -1;
};

DataBatch assemble_batch(const std::vector<Transition>& transitions);

}  // namespace pgdk
