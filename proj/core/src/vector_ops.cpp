#include "fedqv/vector_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fedqv {

namespace {

void require_same_dim(const ParameterVector& a, const ParameterVector& b, const char* op) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

} // namespace

void require_finite(const ParameterVector& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
    }
}

ParameterVector add(const ParameterVector& a, const ParameterVector& b) {
    require_same_dim(a, b, "add");
    ParameterVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

ParameterVector sub(const ParameterVector& a, const ParameterVector& b) {
    require_same_dim(a, b, "sub");
    ParameterVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

ParameterVector scale(const ParameterVector& a, double k) {
    if (!std::isfinite(k)) throw std::invalid_argument("scale: non-finite factor");
    ParameterVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = k * a[i];
    return out;
}

double dot(const ParameterVector& a, const ParameterVector& b) {
    require_same_dim(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(const ParameterVector& a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(const ParameterVector& a, const ParameterVector& b) {
    require_same_dim(a, b, "cosine_similarity");
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

} // namespace fedqv
