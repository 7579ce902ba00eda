#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace qslab {

// Exact rational arithmetic for the closed-form means and the enumeration
// cross-checks. cpp_rational keeps values reduced and prints as "p/q".
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

}  // namespace qslab
