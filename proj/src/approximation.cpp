#include "orthofield/approximation.hpp"

#include <cmath>
#include <cstdlib>

#include "orthofield/lattice.hpp"

namespace orthofield {

namespace {

constexpr double kDropTol = 1e-15;

void check_block_size(int64_t k) {
    if (k < 1) throw FieldError(FieldErrorKind::BadSpec, "block size must be >= 1");
}

void add_scaled(CoeffMap& acc, const CoeffMap& x, double s) {
    for (const auto& [u, v] : x) acc[u] += s * v;
}

void drop_small(CoeffMap& m) {
    for (auto it = m.begin(); it != m.end();) {
        if (std::abs(it->second) <= kDropTol)
            it = m.erase(it);
        else
            ++it;
    }
}

// One blocking summand prod_q (I - P_E^{i_q e_q}) P_E^0 on the coefficient map.
CoeffMap block_summand(const LinearFieldSpec& f, const DirectionSet& E, const MultiIndex& i) {
    LinearFieldSpec g = linear_PE(f, E, MultiIndex(f.d)).base;
    for (int q = 0; q < f.d; ++q) {
        MultiIndex step(f.d);
        step[q] = i[q];
        LinearFieldSpec shifted = linear_PE(g, E, step).base;
        CoeffMap diff = g.coeffs;
        add_scaled(diff, shifted.coeffs, -1.0);
        g.coeffs = std::move(diff);
    }
    return g.coeffs;
}

}  // namespace

LinearFieldSpec blocking(const LinearFieldSpec& f, int64_t k) {
    validate(f);
    check_block_size(k);
    const int d = f.d;

    CoeffMap acc;
    Box stages(ones(d), scaled_ones(d, k));
    iterate_box(stages, [&](const MultiIndex& i) {
        for (const DirectionSet& E : all_direction_sets(d)) {
            CoeffMap term = block_summand(f, E, i);
            add_scaled(acc, term, 1.0);
        }
    });

    const double scale = 1.0 / std::pow(static_cast<double>(k), d);
    for (auto& [u, v] : acc) v *= scale;
    drop_small(acc);

    LinearFieldSpec out = f;
    out.coeffs = std::move(acc);
    return out;
}

FunctionVec blocking(const FiniteSystem& sys, const FunctionVec& f, int64_t k) {
    if (static_cast<int>(f.size()) != sys.n)
        throw SystemError(SystemErrorKind::DimensionMismatch, "blocking: size mismatch");
    if (k < 1) throw SystemError(SystemErrorKind::NotInDomain, "block size must be >= 1");
    if (std::abs(sys.mean(f)) > 1e-9)
        throw SystemError(SystemErrorKind::NotInDomain, "blocking expects a centered function");
    const int d = sys.d;

    FunctionVec out(sys.n, 0.0);
    for (const DirectionSet& E : all_direction_sets(d)) {
        FunctionVec fE = apply_PE(sys, E, MultiIndex(d), f);
        Box stages(ones(d), scaled_ones(d, k));
        iterate_box(stages, [&](const MultiIndex& i) {
            FunctionVec g = fE;
            for (int q = 0; q < d; ++q) {
                MultiIndex step(d);
                step[q] = i[q];
                FunctionVec p = apply_PE(sys, E, step, g);
                for (int a = 0; a < sys.n; ++a) g[a] -= p[a];
            }
            for (int a = 0; a < sys.n; ++a) out[a] += g[a];
        });
    }

    const double scale = 1.0 / std::pow(static_cast<double>(k), d);
    for (int a = 0; a < sys.n; ++a) out[a] *= scale;
    return out;
}

BlockedLinear martingale_part(const LinearFieldSpec& f, int64_t k) {
    BlockedLinear out;
    out.k = k;
    out.result = blocking(f, k);
    double c = 0.0;
    for (const auto& [u, v] : out.result.coeffs) c += v;
    out.coeff = c;
    out.martingale = f;
    out.martingale.coeffs.clear();
    out.martingale.coeffs[MultiIndex(f.d)] = c;
    return out;
}

BlockedExact martingale_part(const FiniteSystem& sys, const FunctionVec& f, int64_t k,
                             const DecomposeOptions& opts) {
    BlockedExact out;
    out.k = k;
    out.result = blocking(sys, f, k);  // validates the preconditions

    const int d = sys.d;
    const unsigned nsets = 1u << d;
    DecompositionParts dec;
    dec.d = d;
    dec.parts.assign(nsets, FunctionVec(sys.n, 0.0));
    dec.coboundary_residual.assign(nsets, 0.0);
    dec.certificates.assign(nsets, {});

    for (const DirectionSet& E : all_direction_sets(d)) {
        FunctionVec fE = apply_PE(sys, E, MultiIndex(d), f);
        Box stages(ones(d), scaled_ones(d, k));
        iterate_box(stages, [&](const MultiIndex& i) { product_chain_decompose(sys, E, i, fE, dec.parts); });
    }

    const double scale = 1.0 / std::pow(static_cast<double>(k), d);
    for (auto& part : dec.parts)
        for (double& v : part) v *= scale;

    FunctionVec rec = reconstruct(sys, dec);
    for (int a = 0; a < sys.n; ++a) rec[a] -= out.result[a];
    dec.residual = sys.norm(rec);
    dec.decomposable = dec.residual <= opts.accept_tol;

    certify_parts(sys, dec, opts.cert_tol);
    const PartCertificate& mc = dec.certificates[0];
    if (mc.measurability_violation > opts.cert_tol || mc.projection_violation > opts.cert_tol ||
        mc.martingale_violation > opts.cert_tol)
        throw SystemError(SystemErrorKind::CertificationFailed,
                          "martingale part failed the orthomartingale-difference certificate");

    out.martingale = dec.parts[0];
    out.decomposition = std::move(dec);
    return out;
}

CauchyTable cauchy_diagnostics(const LinearFieldSpec& f, const std::vector<int64_t>& k_list) {
    for (size_t r = 0; r < k_list.size(); ++r) {
        if (k_list[r] < 1) throw FieldError(FieldErrorKind::BadSpec, "block sizes must be >= 1");
        if (r > 0 && k_list[r] < k_list[r - 1])
            throw FieldError(FieldErrorKind::BadSpec, "block sizes must be sorted ascending");
    }

    CauchyTable table;
    table.k = k_list;
    table.coeff.reserve(k_list.size());
    for (int64_t k : k_list) table.coeff.push_back(martingale_part(f, k).coeff);

    const size_t m = k_list.size();
    table.dist.assign(m, std::vector<double>(m, 0.0));
    for (size_t r = 0; r < m; ++r)
        for (size_t c = 0; c < m; ++c)
            table.dist[r][c] = std::abs(table.coeff[r] - table.coeff[c]) * f.innovation.sd;
    return table;
}

}  // namespace orthofield
