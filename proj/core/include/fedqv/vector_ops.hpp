#pragma once

#include <cstddef>
#include <vector>

namespace fedqv {

// Flat vector of model parameters. All aggregation math in this library
// operates on these; entries are finite 64-bit reals and binary operations
// require equal dimensions (mismatch is an error, never truncation).
using ParameterVector = std::vector<double>;

ParameterVector add(const ParameterVector& a, const ParameterVector& b);
ParameterVector sub(const ParameterVector& a, const ParameterVector& b);
ParameterVector scale(const ParameterVector& a, double k);
double dot(const ParameterVector& a, const ParameterVector& b);
double l2_norm(const ParameterVector& a);

// dot(a,b) / (|a|*|b|), clamped to [-1,1]. Vectors with norm below 1e-12
// carry no directional information and yield 0.
double cosine_similarity(const ParameterVector& a, const ParameterVector& b);

// Throws std::invalid_argument when any entry is NaN/Inf.
void require_finite(const ParameterVector& v, const char* what);

} // namespace fedqv
