#include "qslab/quicksort.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace qslab {

namespace {

// In-place recursion over [lo, hi); `aux` buffers the upper sublist so the
// partition stays order-preserving. Duplicates are detected the moment a key
// meets an equal pivot, which every duplicate pair eventually does.
template <class T>
std::uint64_t count_range(std::vector<T>& v, std::size_t lo, std::size_t hi,
                          std::vector<T>& aux) {
    const std::size_t n = hi - lo;
    if (n <= 1) return 0;
    const T pivot = v[lo];
    const std::size_t aux_start = aux.size();
    std::size_t write = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        if (v[i] == pivot) throw std::invalid_argument("quicksort_comparisons: duplicate keys");
        if (v[i] < pivot)
            v[write++] = v[i];
        else
            aux.push_back(v[i]);
    }
    const std::size_t pivot_pos = write;
    v[pivot_pos] = pivot;
    std::copy(aux.begin() + static_cast<std::ptrdiff_t>(aux_start), aux.end(),
              v.begin() + static_cast<std::ptrdiff_t>(pivot_pos) + 1);
    aux.resize(aux_start);

    std::uint64_t c = n - 1;
    c += count_range(v, lo, pivot_pos, aux);
    c += count_range(v, pivot_pos + 1, hi, aux);
    return c;
}

template <class T>
std::uint64_t count_list(const std::vector<T>& keys) {
    std::vector<T> work(keys);
    std::vector<T> aux;
    aux.reserve(work.size());
    return count_range(work, 0, work.size(), aux);
}

}  // namespace

PartitionResult partition(const std::vector<double>& keys) {
    if (keys.empty()) throw std::invalid_argument("partition: empty list");
    PartitionResult result;
    result.pivot = keys.front();
    for (std::size_t i = 1; i < keys.size(); ++i) {
        if (keys[i] == result.pivot)
            throw std::invalid_argument("partition: duplicate keys");
        if (keys[i] <= result.pivot)
            result.lower.push_back(keys[i]);
        else
            result.upper.push_back(keys[i]);
    }
    return result;
}

std::uint64_t quicksort_comparisons(const std::vector<double>& keys) {
    return count_list(keys);
}

std::uint64_t quicksort_comparisons(const std::vector<int>& keys) {
    return count_list(keys);
}

std::uint64_t ExactDistribution::permutations() const {
    std::uint64_t total = 0;
    for (const auto& [comparisons, count] : counts) total += count;
    return total;
}

ExactDistribution enumerate_exact(int n) {
    if (n < 1 || n > 10)
        throw std::invalid_argument("enumerate_exact: n must lie in [1, 10]");
    ExactDistribution dist;
    dist.n = n;
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);
    std::vector<int> work(perm.size());
    std::vector<int> aux;
    aux.reserve(perm.size());
    do {
        work = perm;
        aux.clear();
        const std::uint64_t c = count_range(work, 0, work.size(), aux);
        ++dist.counts[c];
    } while (std::next_permutation(perm.begin(), perm.end()));
    return dist;
}

Rational exact_mean(const ExactDistribution& dist) {
    BigInt weighted = 0;
    BigInt total = 0;
    for (const auto& [comparisons, count] : dist.counts) {
        weighted += BigInt(comparisons) * count;
        total += count;
    }
    if (total == 0) throw std::invalid_argument("exact_mean: empty distribution");
    return Rational(weighted, total);
}

}  // namespace qslab
