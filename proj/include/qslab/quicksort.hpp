#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "qslab/rational.hpp"

namespace qslab {

/// One order-preserving partition pass: the first element is the pivot, the
/// remaining keys keep their relative order in the two output lists.
struct PartitionResult {
    double pivot;
    std::vector<double> lower;  // keys <= pivot, original order
    std::vector<double> upper;  // keys >  pivot, original order
};

PartitionResult partition(const std::vector<double>& keys);

/// Total comparison count of first-element-pivot Quicksort: n-1 per pass,
/// zero for lists of size 0 or 1. Throws on duplicate keys (the continuous
/// model has none).
std::uint64_t quicksort_comparisons(const std::vector<double>& keys);
std::uint64_t quicksort_comparisons(const std::vector<int>& keys);

/// Exact distribution of the comparison count over all n! rank
/// permutations.
struct ExactDistribution {
    int n = 0;
    std::map<std::uint64_t, std::uint64_t> counts;  // comparisons -> #permutations

    std::uint64_t permutations() const;  // sum of counts, equals n!
};

/// Enumerates every permutation of {1..n}; the count depends only on ranks,
/// so this is the full distribution for continuous inputs. Budgeted at
/// n <= 10 (10! ~ 3.6e6).
ExactDistribution enumerate_exact(int n);

Rational exact_mean(const ExactDistribution& dist);

}  // namespace qslab
