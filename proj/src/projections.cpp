#include "orthofield/projections.hpp"

#include <cmath>
#include <cstdio>

namespace orthofield {

namespace {

constexpr double kDropTol = 1e-15;

void require_nonneg(const MultiIndex& i) {
    for (int q = 0; q < i.d; ++q)
        if (i[q] < 0) throw FieldError(FieldErrorKind::BadSpec, "projection stage must be >= 0, got " + i.str());
}

void require_positive(const MultiIndex& n) {
    for (int q = 0; q < n.d; ++q)
        if (n[q] < 1) throw FieldError(FieldErrorKind::BadSpec, "summation box must be >= 1, got " + n.str());
}

void drop_small(CoeffMap& m) {
    for (auto it = m.begin(); it != m.end();)
        it = std::abs(it->second) < kDropTol ? m.erase(it) : std::next(it);
}

CoeffMap pe_coeffs(const CoeffMap& a, const DirectionSet& E, const MultiIndex& i) {
    const MultiIndex shift = i * eps_sign(E);
    CoeffMap g;
    for (const auto& [t, v] : a) {
        const MultiIndex u = t - shift;  // g_u = a_{u + i*eps(E)}
        if (in_region(E, u)) g[u] += v;
    }
    drop_small(g);
    return g;
}

}  // namespace

bool in_region(const DirectionSet& E, const MultiIndex& u) {
    for (int q = 0; q < u.d; ++q) {
        if (E.contains(q)) {
            if (u[q] > -1) return false;
        } else {
            if (u[q] < 0) return false;
        }
    }
    return true;
}

ProjectedField linear_PE(const LinearFieldSpec& f, const DirectionSet& E, const MultiIndex& i) {
    require_nonneg(i);
    ProjectedField out;
    out.base = f;
    out.base.coeffs = pe_coeffs(f.coeffs, E, i);
    out.base.truncation_radius = -1;
    out.lineage = "PE[E=" + E.str() + ",i=" + i.str() + "]";
    return out;
}

ProjectedField linear_PE(const ProjectedField& f, const DirectionSet& E, const MultiIndex& i) {
    ProjectedField out = linear_PE(f.base, E, i);
    out.lineage += " o " + f.lineage;
    return out;
}

double linear_pi(const LinearFieldSpec& f, const MultiIndex& j) {
    const auto it = f.coeffs.find(-j);
    return it == f.coeffs.end() ? 0.0 : it->second;
}

CoeffMap sum_PE_coeffs(const LinearFieldSpec& f, const DirectionSet& E, const MultiIndex& n) {
    require_positive(n);
    const MultiIndex sign = eps_sign(E);
    CoeffMap c;
    iterate_box(Box(zeros(n.d), n - ones(n.d)), [&](const MultiIndex& i) {
        const MultiIndex shift = i * sign;
        for (const auto& [t, v] : f.coeffs) {
            const MultiIndex u = t - shift;
            if (in_region(E, u)) c[u] += v;
        }
    });
    drop_small(c);
    return c;
}

double sum_PE_norm(const LinearFieldSpec& f, const DirectionSet& E, const MultiIndex& n) {
    const CoeffMap c = sum_PE_coeffs(f, E, n);
    double s2 = 0.0;
    for (const auto& [u, v] : c) {
        (void)u;
        s2 += v * v;
    }
    return f.innovation.sd * std::sqrt(s2);
}

std::string coeff_csv(const LinearFieldSpec& f) {
    std::string out;
    for (int q = 0; q < f.d; ++q) out += "i" + std::to_string(q + 1) + ",";
    out += "value\n";
    char buf[64];
    for (const auto& [u, v] : f.coeffs) {
        for (int q = 0; q < f.d; ++q) out += std::to_string(u[q]) + ",";
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
        out += "\n";
    }
    return out;
}

}  // namespace orthofield
