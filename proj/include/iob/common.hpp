#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iob {

using Index = std::size_t;

/// CPT rows, b0 tables and beliefs must sum to 1 within this tolerance.
inline constexpr double kProbTolerance = 1e-9;
/// Derived probability sums (marginalizations over evaluator output) are
/// checked against this looser tolerance.
inline constexpr double kSumTolerance = 1e-8;

struct CapExceeded : std::runtime_error {
    explicit CapExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

struct ObservationDependenceViolation : std::runtime_error {
    explicit ObservationDependenceViolation(const std::string& msg) : std::runtime_error(msg) {}
};

struct RewardDependenceViolation : std::runtime_error {
    explicit RewardDependenceViolation(const std::string& msg) : std::runtime_error(msg) {}
};

struct SignMismatch : std::invalid_argument {
    explicit SignMismatch(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Mixed-radix indexing over an ordered list of cardinalities.
/// Row-major: the first listed dimension varies slowest.
class MixedRadix {
public:
    MixedRadix() = default;

    explicit MixedRadix(std::vector<int> cards) : cards_(std::move(cards)) {
        strides_.assign(cards_.size(), 1);
        for (int d = static_cast<int>(cards_.size()) - 2; d >= 0; --d)
            strides_[d] = strides_[d + 1] * static_cast<Index>(cards_[d + 1]);
        size_ = 1;
        for (int c : cards_) size_ *= static_cast<Index>(c);
    }

    Index size() const { return size_; }
    Index dims() const { return cards_.size(); }
    int card(Index dim) const { return cards_[dim]; }
    Index stride(Index dim) const { return strides_[dim]; }
    const std::vector<int>& cards() const { return cards_; }

    Index encode(const std::vector<int>& values) const {
        Index idx = 0;
        for (Index d = 0; d < cards_.size(); ++d) idx += static_cast<Index>(values[d]) * strides_[d];
        return idx;
    }

    void decode(Index index, std::vector<int>& out) const {
        out.resize(cards_.size());
        for (Index d = 0; d < cards_.size(); ++d) {
            out[d] = static_cast<int>(index / strides_[d]);
            index %= strides_[d];
        }
    }

    std::vector<int> decode(Index index) const {
        std::vector<int> out;
        decode(index, out);
        return out;
    }

private:
    std::vector<int> cards_;
    std::vector<Index> strides_;
    Index size_ = 1;
};

/// Runs fn(begin, end) over disjoint chunks of [0, n). Each chunk owns its
/// index range, so workers writing to per-index slots never race and the
/// result is independent of the thread count.
void parallel_chunks(Index n, unsigned n_threads, const std::function<void(Index, Index)>& fn);

/// Hardware concurrency, at least 1.
unsigned default_threads();

}  // namespace iob
