#include "orthofield/fieldmodels.hpp"

#include <cmath>
#include <cstdlib>
#include <type_traits>

namespace orthofield {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// map a 64-bit word to (0, 1]; never 0, safe under log()
double to_unit(uint64_t x) { return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53; }

double sign_with_tie(double x) { return x < 0.0 ? -1.0 : 1.0; }

void check_dim(int d) {
    if (d < 1 || d > kMaxDim)
        throw FieldError(FieldErrorKind::BadSpec, "field dimension must be between 1 and " + std::to_string(kMaxDim));
}

void check_innovation(const InnovationSpec& inn) {
    if (!(inn.sd > 0.0)) throw FieldError(FieldErrorKind::BadSpec, "innovation sd must be positive");
}

}  // namespace

uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t site_key(uint64_t seed, const MultiIndex& site) {
    uint64_t h = mix64(seed ^ 0x243f6a8885a308d3ULL);
    for (int q = 0; q < site.d; ++q)
        h = mix64(h ^ (mix64(static_cast<uint64_t>(q + 1) * kGolden) + static_cast<uint64_t>(site[q])));
    return h;
}

uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    return mix64(mix64(seed ^ kGolden) + (stream + 1) * 0xbf58476d1ce4e5b9ULL);
}

double innovation_at(const InnovationSpec& spec, uint64_t seed, const MultiIndex& site) {
    const uint64_t key = site_key(seed, site);
    switch (spec.law) {
        case InnovationLaw::StandardNormal: {
            const double u1 = to_unit(mix64(key + 1 * kGolden));
            const double u2 = to_unit(mix64(key + 2 * kGolden));
            return spec.sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        }
        case InnovationLaw::Rademacher:
            return (mix64(key + 1 * kGolden) >> 63) ? spec.sd : -spec.sd;
        case InnovationLaw::CenteredUniform: {
            const double u = to_unit(mix64(key + 1 * kGolden));
            return spec.sd * std::sqrt(3.0) * (2.0 * u - 1.0);
        }
    }
    throw FieldError(FieldErrorKind::BadSpec, "unknown innovation law");
}

int field_dim(const FieldSpec& spec) {
    return std::visit([](const auto& s) { return s.d; }, spec);
}

void validate(const FieldSpec& spec) {
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            check_dim(s.d);
            check_innovation(s.innovation);
            if constexpr (std::is_same_v<T, LinearFieldSpec>) {
                for (const auto& [idx, a] : s.coeffs) {
                    (void)a;
                    if (idx.d != s.d)
                        throw FieldError(FieldErrorKind::BadSpec, "coefficient index dimension mismatch");
                }
            } else if constexpr (std::is_same_v<T, VolterraFieldSpec>) {
                for (const auto& p : s.pairs) {
                    if (p.i.d != s.d || p.j.d != s.d)
                        throw FieldError(FieldErrorKind::BadSpec, "pair index dimension mismatch");
                    if (p.i == p.j)
                        throw FieldError(FieldErrorKind::BadSpec,
                                         "diagonal pair " + p.i.str() + " not allowed in a second-order field");
                }
            }
        },
        spec);
}

Box support_box(const LinearFieldSpec& spec) {
    if (spec.coeffs.empty()) throw FieldError(FieldErrorKind::BadSpec, "empty coefficient support");
    MultiIndex lo = spec.coeffs.begin()->first, hi = lo;
    for (const auto& [idx, a] : spec.coeffs) {
        (void)a;
        lo = cmin(lo, idx);
        hi = cmax(hi, idx);
    }
    return {lo, hi};
}

namespace {

// innovation sites needed: {k - i : k in window, i in [slo, shi]}
Box pad_for_support(const Box& window, const MultiIndex& slo, const MultiIndex& shi) {
    return {window.lo - shi, window.hi - slo};
}

Box pad_linear(const LinearFieldSpec& s, const Box& window) {
    if (s.coeffs.empty()) return window;
    const Box supp = support_box(s);
    return pad_for_support(window, supp.lo, supp.hi);
}

Box pad_md(const OrthoMDSpec& s, const Box& window) {
    return {window.lo - ones(s.d), window.hi};
}

Box pad_volterra(const VolterraFieldSpec& s, const Box& window) {
    if (s.pairs.empty()) return window;
    MultiIndex lo = s.pairs.front().i, hi = lo;
    for (const auto& p : s.pairs) {
        lo = cmin(lo, cmin(p.i, p.j));
        hi = cmax(hi, cmax(p.i, p.j));
    }
    return pad_for_support(window, lo, hi);
}

std::vector<double> draw_pad(const InnovationSpec& inn, const Box& pad, uint64_t seed) {
    if (pad.volume() > 100000000LL)
        throw FieldError(FieldErrorKind::WindowTooLarge,
                         "window needs " + std::to_string(pad.volume()) + " innovation sites (limit 10^8)");
    std::vector<double> eps(static_cast<size_t>(pad.volume()));
    size_t off = 0;
    iterate_box(pad, [&](const MultiIndex& s) { eps[off++] = innovation_at(inn, seed, s); });
    return eps;
}

}  // namespace

Box sample_pad(const FieldSpec& spec, const Box& window) {
    if (field_dim(spec) != window.dim())
        throw FieldError(FieldErrorKind::BadSpec, "window dimension does not match the field");
    if (std::holds_alternative<LinearFieldSpec>(spec)) return pad_linear(std::get<LinearFieldSpec>(spec), window);
    if (std::holds_alternative<OrthoMDSpec>(spec)) return pad_md(std::get<OrthoMDSpec>(spec), window);
    return pad_volterra(std::get<VolterraFieldSpec>(spec), window);
}

Realization sample_window(const FieldSpec& spec, const Box& window, uint64_t seed) {
    validate(spec);
    if (window.volume() > 100000000LL)
        throw FieldError(FieldErrorKind::WindowTooLarge,
                         "window holds " + std::to_string(window.volume()) + " sites (limit 10^8)");
    const Box pad = sample_pad(spec, window);

    Realization r(window);
    r.seed = seed;
    r.values.assign(static_cast<size_t>(window.volume()), 0.0);

    if (std::holds_alternative<LinearFieldSpec>(spec)) {
        const auto& s = std::get<LinearFieldSpec>(spec);
        if (s.coeffs.empty()) return r;
        const auto eps = draw_pad(s.innovation, pad, seed);
        size_t off = 0;
        iterate_box(window, [&](const MultiIndex& k) {
            double v = 0.0;
            for (const auto& [i, a] : s.coeffs) v += a * eps[static_cast<size_t>(box_offset(pad, k - i))];
            r.values[off++] = v;
        });
        return r;
    }
    if (std::holds_alternative<OrthoMDSpec>(spec)) {
        const auto& s = std::get<OrthoMDSpec>(spec);
        const auto eps = draw_pad(s.innovation, pad, seed);
        const MultiIndex one = ones(s.d);
        size_t off = 0;
        iterate_box(window, [&](const MultiIndex& k) {
            const double e0 = eps[static_cast<size_t>(box_offset(pad, k))];
            const double ep = eps[static_cast<size_t>(box_offset(pad, k - one))];
            const double v = s.modulation == Modulation::None ? 1.0 : sign_with_tie(ep);
            r.values[off++] = e0 * v;
        });
        return r;
    }
    const auto& s = std::get<VolterraFieldSpec>(spec);
    if (s.pairs.empty()) return r;
    const auto eps = draw_pad(s.innovation, pad, seed);
    size_t off = 0;
    iterate_box(window, [&](const MultiIndex& k) {
        double v = 0.0;
        for (const auto& p : s.pairs)
            v += p.c * eps[static_cast<size_t>(box_offset(pad, k - p.i))] *
                 eps[static_cast<size_t>(box_offset(pad, k - p.j))];
        r.values[off++] = v;
    });
    return r;
}

LinearFieldSpec product_decay_field(int d, double ratio, double scale, const InnovationSpec& innovation) {
    check_dim(d);
    check_innovation(innovation);
    if (!(ratio > 0.0 && ratio < 1.0))
        throw FieldError(FieldErrorKind::BadSpec, "decay ratio must lie in (0,1)");
    if (scale == 0.0) throw FieldError(FieldErrorKind::BadSpec, "scale must be nonzero");

    // per-axis truncation: ratio^r * |scale| >= 1e-15
    int64_t radius = 0;
    while (std::abs(scale) * std::pow(ratio, static_cast<double>(radius + 1)) >= 1e-15) ++radius;

    LinearFieldSpec spec;
    spec.d = d;
    spec.innovation = innovation;
    spec.truncation_radius = radius;
    iterate_box(Box(zeros(d), scaled_ones(d, radius)), [&](const MultiIndex& i) {
        double a = scale;
        for (int q = 0; q < d; ++q) a *= std::pow(ratio, static_cast<double>(i[q]));
        if (std::abs(a) >= 1e-15) spec.coeffs[i] = a;
    });
    return spec;
}

double field_l2_norm(const LinearFieldSpec& spec) {
    double s2 = 0.0;
    for (const auto& [idx, a] : spec.coeffs) {
        (void)idx;
        s2 += a * a;
    }
    return spec.innovation.sd * std::sqrt(s2);
}

double md_l2_norm(const OrthoMDSpec& spec) { return spec.innovation.sd; }

// --- exact embedding ---------------------------------------------------------

int ExactEmbedding::site_bit(const MultiIndex& s) const {
    MultiIndex w(s.d);
    for (int q = 0; q < s.d; ++q) {
        const int64_t L = sites.side(q);
        int64_t x = (s[q] - sites.lo[q]) % L;
        if (x < 0) x += L;
        w[q] = sites.lo[q] + x;
    }
    return static_cast<int>(box_offset(sites, w));
}

double ExactEmbedding::omega(int atom, const MultiIndex& s) const {
    return ((static_cast<uint64_t>(atom) >> site_bit(s)) & 1u) ? 1.0 : -1.0;
}

ExactEmbedding exact_embed(const LinearFieldSpec& spec, int radius) {
    validate(FieldSpec{spec});
    if (spec.innovation.law != InnovationLaw::Rademacher)
        throw SystemError(SystemErrorKind::NotInDomain, "exact embedding requires Rademacher innovations");
    if (radius < 1) throw SystemError(SystemErrorKind::NotInDomain, "embedding radius must be >= 1");

    const int d = spec.d;
    int64_t nsites = 1;
    for (int q = 0; q < d; ++q) nsites *= 2 * radius + 1;
    if (nsites > 20)
        throw SystemError(SystemErrorKind::TooLarge,
                          "embedding needs " + std::to_string(nsites) + " binary sites (limit 20)");
    for (const auto& [idx, a] : spec.coeffs) {
        (void)a;
        for (int q = 0; q < d; ++q)
            if (std::llabs(idx[q]) > radius)
                throw SystemError(SystemErrorKind::NotInDomain,
                                  "coefficient at " + idx.str() + " lies outside the embedding radius");
    }

    const Box site_box(scaled_ones(d, -radius), scaled_ones(d, radius));
    const int S = static_cast<int>(nsites);
    const int n = 1 << S;

    // flat index of each site, and of each site shifted by +e_q (wrapped)
    std::vector<MultiIndex> site_of(static_cast<size_t>(S), MultiIndex(d));
    {
        size_t off = 0;
        iterate_box(site_box, [&](const MultiIndex& s) { site_of[off++] = s; });
    }
    auto wrapped_bit = [&](MultiIndex s) {
        for (int q = 0; q < d; ++q) {
            const int64_t L = 2 * radius + 1;
            int64_t x = (s[q] + radius) % L;
            if (x < 0) x += L;
            s[q] = x - radius;
        }
        return static_cast<int>(box_offset(site_box, s));
    };

    // T_q relabels bit patterns: bit of T_q(a) at site s = bit of a at s + e_q
    std::vector<std::vector<int>> perms(static_cast<size_t>(d));
    for (int q = 0; q < d; ++q) {
        std::vector<int> src(static_cast<size_t>(S));
        for (int b = 0; b < S; ++b) src[static_cast<size_t>(b)] = wrapped_bit(site_of[static_cast<size_t>(b)] + unit(d, q));
        auto& pq = perms[static_cast<size_t>(q)];
        pq.resize(static_cast<size_t>(n));
        for (int a = 0; a < n; ++a) {
            int img = 0;
            for (int b = 0; b < S; ++b) img |= static_cast<int>((static_cast<unsigned>(a) >> src[static_cast<size_t>(b)]) & 1u) << b;
            pq[static_cast<size_t>(a)] = img;
        }
    }

    // base partition: bits of the past window [-radius, 0]^d
    const Box past(scaled_ones(d, -radius), zeros(d));
    std::vector<int> past_bits;
    iterate_box(past, [&](const MultiIndex& s) { past_bits.push_back(wrapped_bit(s)); });
    Partition base(static_cast<size_t>(n), 0);
    for (int a = 0; a < n; ++a) {
        int lab = 0;
        for (size_t j = 0; j < past_bits.size(); ++j)
            lab |= static_cast<int>((static_cast<unsigned>(a) >> past_bits[j]) & 1u) << j;
        base[static_cast<size_t>(a)] = lab;
    }

    const std::vector<double> weights(static_cast<size_t>(n), 1.0 / static_cast<double>(n));
    ExactEmbedding emb(build_system(d, weights, perms, base, false), site_box);
    emb.radius = radius;
    emb.f = embed_field(emb, spec.coeffs, spec.innovation.sd);
    return emb;
}

FunctionVec embed_field(const ExactEmbedding& emb, const CoeffMap& coeffs, double sd) {
    FunctionVec f(static_cast<size_t>(emb.sys.n), 0.0);
    for (const auto& [i, a] : coeffs) {
        const int bit = emb.site_bit(-i);
        for (int atom = 0; atom < emb.sys.n; ++atom)
            f[static_cast<size_t>(atom)] +=
                a * sd * (((static_cast<uint64_t>(atom) >> bit) & 1u) ? 1.0 : -1.0);
    }
    return f;
}

}  // namespace orthofield
