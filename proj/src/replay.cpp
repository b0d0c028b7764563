#include "pgdk/replay.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pgdk/errors.hpp"

namespace pgdk {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
    if (capacity_ == 0) throw InvalidInput("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
    if (!t.x.allFinite() || !t.u.allFinite() || !t.x_next.allFinite() || !std::isfinite(t.cost))
        throw InvalidInput("ReplayBuffer::push: non-finite transition");
    if (t.cost < 0.0)
        throw InvalidInput("ReplayBuffer::push: negative stage cost");
    if (t.x_next.size() != t.x.size())
        throw InvalidInput("ReplayBuffer::push: x and x_next length mismatch");
    if (n_ < 0) {
        n_ = t.x.size();
        m_ = t.u.size();
    } else if (t.x.size() != n_ || t.u.size() != m_) {
        throw InvalidInput("ReplayBuffer::push: dimensions differ from first pushed transition");
    }
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(t);
}

DataBatch ReplayBuffer::sample_batch(Eigen::Index n_samples) {
    if (n_samples <= 0) throw InvalidInput("sample_batch: n_samples must be positive");
    if (static_cast<std::size_t>(n_samples) > items_.size())
        throw InsufficientData("sample_batch: buffer holds " + std::to_string(items_.size()) +
                               " < " + std::to_string(n_samples) + " requested");
    // Partial Fisher-Yates over an index vector.
    std::vector<std::size_t> idx(items_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<Transition> chosen;
    chosen.reserve(static_cast<std::size_t>(n_samples));
    for (Eigen::Index k = 0; k < n_samples; ++k) {
        std::uniform_int_distribution<std::size_t> dist(static_cast<std::size_t>(k),
                                                        idx.size() - 1);
        std::swap(idx[static_cast<std::size_t>(k)], idx[dist(rng_)]);
        chosen.push_back(items_[idx[static_cast<std::size_t>(k)]]);
    }
    return assemble_batch(chosen);
}

DataBatch assemble_batch(const std::vector<Transition>& transitions) {
    if (transitions.empty()) throw InvalidInput("assemble_batch: empty transition list");
    const Eigen::Index n = transitions.front().x.size();
    const Eigen::Index m = transitions.front().u.size();
    const Eigen::Index N = static_cast<Eigen::Index>(transitions.size());
    DataBatch batch;
    batch.X.resize(n, N);
    batch.Xbar.resize(n, N);
    batch.U.resize(m, N);
    batch.costs.resize(N);
    for (Eigen::Index j = 0; j < N; ++j) {
        const Transition& t = transitions[static_cast<std::size_t>(j)];
        if (t.x.size() != n || t.u.size() != m || t.x_next.size() != n)
            throw InvalidInput("assemble_batch: inconsistent transition dimensions");
        batch.X.col(j) = t.x;
        batch.Xbar.col(j) = t.x_next;
        batch.U.col(j) = t.u;
        batch.costs(j) = t.cost;
    }
    return batch;
}

void ReplayBuffer::dump_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("dump_csv: cannot open " + path);
    std::fprintf(f, "# %" PRId64 " %" PRId64 "\n", static_cast<std::int64_t>(n_),
                 static_cast<std::int64_t>(m_));
    for (const Transition& t : items_) {
        for (Eigen::Index i = 0; i < t.x.size(); ++i) std::fprintf(f, "%.17g,", t.x(i));
        for (Eigen::Index i = 0; i < t.u.size(); ++i) std::fprintf(f, "%.17g,", t.u(i));
        std::fprintf(f, "%.17g", t.cost);
        for (Eigen::Index i = 0; i < t.x_next.size(); ++i) std::fprintf(f, ",%.17g", t.x_next(i));
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

std::vector<Transition> ReplayBuffer::load_dump(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_dump: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("load_dump: empty file " + path);
    Eigen::Index n = 0, m = 0;
    {
        std::istringstream hs(line);
        std::string hash;
        hs >> hash >> n >> m;
        if (hash != "#" || n < 1 || m < 1)
            throw ParseError("load_dump: bad dimension header at row 1 of " + path);
    }
    std::vector<Transition> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("load_dump: unparsable value at row " + std::to_string(row));
            }
        }
        if (static_cast<Eigen::Index>(vals.size()) != 2 * n + m + 1)
            throw ParseError("load_dump: wrong field count at row " + std::to_string(row));
        Transition t;
        t.x = Eigen::Map<Vector>(vals.data(), n);
        t.u = Eigen::Map<Vector>(vals.data() + n, m);
        t.cost = vals[static_cast<std::size_t>(n + m)];
        t.x_next = Eigen::Map<Vector>(vals.data() + n + m + 1, n);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace pgdk
