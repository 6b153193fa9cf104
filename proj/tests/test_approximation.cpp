#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "orthofield/approximation.hpp"
#include "orthofield/exactsys.hpp"
#include "orthofield/fieldmodels.hpp"

using namespace orthofield;

namespace {

LinearFieldSpec make_field(int d, std::vector<std::pair<MultiIndex, double>> entries,
                           InnovationLaw law = InnovationLaw::Rademacher, double sd = 1.0) {
    LinearFieldSpec s;
    s.d = d;
    s.innovation = {law, sd};
    for (auto& [i, a] : entries) s.coeffs[i] = a;
    return s;
}

double linf(const FunctionVec& a, const FunctionVec& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs(const FunctionVec& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

template <typename Fn>
SystemErrorKind sys_kind_of(Fn&& fn) {
    try {
        fn();
    } catch (const SystemError& e) {
        return e.kind;
    }
    return SystemErrorKind::TooLarge;  // sentinel: "did not throw SystemError"
}

template <typename Fn>
FieldErrorKind field_kind_of(Fn&& fn) {
    try {
        fn();
    } catch (const FieldError& e) {
        return e.kind;
    }
    return FieldErrorKind::WindowTooLarge;  // sentinel: "did not throw FieldError"
}

}  // namespace

TEST_CASE("block averages fix the pure i.i.d. field") {
    for (int d = 1; d <= 2; ++d) {
        const LinearFieldSpec f = make_field(d, {{zeros(d), 1.0}});
        for (int64_t k : {1, 2, 4, 8}) {
            const LinearFieldSpec b = blocking(f, k);
            REQUIRE(b.coeffs.size() == 1);
            CHECK(std::abs(b.coeffs.at(zeros(d)) - 1.0) <= 1e-15);

            const BlockedLinear mp = martingale_part(f, k);
            CHECK(std::abs(mp.coeff - 1.0) <= 1e-15);
            REQUIRE(mp.martingale.coeffs.size() == 1);
            CHECK(std::abs(mp.martingale.coeffs.at(zeros(d)) - 1.0) <= 1e-15);
        }
        const CauchyTable t = cauchy_diagnostics(f, {1, 2, 4, 8});
        for (const auto& row : t.dist)
            for (double v : row) CHECK(std::abs(v) <= 1e-15);
    }
}

TEST_CASE("block averages are linear in the coefficients") {
    const LinearFieldSpec f = make_field(2, {{MultiIndex(2, {0, 0}), 1.0},
                                             {MultiIndex(2, {1, -1}), -0.5},
                                             {MultiIndex(2, {-2, 1}), 0.25},
                                             {MultiIndex(2, {2, 2}), 0.125}});
    LinearFieldSpec g = f;
    for (auto& [u, v] : g.coeffs) v *= 3.5;

    for (int64_t k : {1, 2, 3}) {
        const LinearFieldSpec bf = blocking(f, k);
        const LinearFieldSpec bg = blocking(g, k);
        REQUIRE(bf.coeffs.size() == bg.coeffs.size());
        for (const auto& [u, v] : bf.coeffs) {
            REQUIRE(bg.coeffs.count(u) == 1);
            CHECK(bg.coeffs.at(u) == doctest::Approx(3.5 * v).epsilon(1e-13));
        }
    }
}

TEST_CASE("two-tap causal field: explicit block averages and coefficient limit") {
    // f = 0.5 eps_0 + 0.5 eps_{-1}
    const LinearFieldSpec f =
        make_field(1, {{MultiIndex(1, {0}), 0.5}, {MultiIndex(1, {1}), 0.5}});

    for (int64_t k : {1, 2, 4, 8}) {
        const BlockedLinear mp = martingale_part(f, k);
        // only the one-step stage survives: B_k(f) = f - (1/k) P^1 f
        CHECK(std::abs(mp.result.coeffs.at(MultiIndex(1, {1})) - 0.5) <= 1e-15);
        const double b0 = k == 1 ? 0.0
                                 : mp.result.coeffs.at(MultiIndex(1, {0}));
        CHECK(std::abs(b0 - (0.5 - 0.5 / static_cast<double>(k))) <= 1e-15);
        CHECK(std::abs(mp.coeff - (1.0 - 0.5 / static_cast<double>(k))) <= 1e-15);
    }

    const CauchyTable t = cauchy_diagnostics(f, {1, 2, 4, 8, 16});
    // ||m_k - m_{2k}|| = 0.25/k strictly decreasing toward 0
    for (size_t r = 0; r + 1 < t.k.size(); ++r) {
        const double dk = t.dist[r][r + 1];
        CHECK(std::abs(dk - 0.25 / static_cast<double>(t.k[r])) <= 1e-14);
        if (r + 2 < t.k.size()) CHECK(t.dist[r + 1][r + 2] < dk);
        CHECK(t.dist[r][r + 1] == t.dist[r + 1][r]);  // symmetry
        CHECK(t.dist[r][r] == 0.0);
    }
}

TEST_CASE("noncausal field: both direction components feed the average") {
    const LinearFieldSpec f = make_field(1, {{MultiIndex(1, {-1}), 2.0},
                                             {MultiIndex(1, {0}), 1.0},
                                             {MultiIndex(1, {1}), -0.5}});
    // hand computation: B_k keeps the anticausal tap untouched and shifts the
    // causal pair, so the martingale coefficient is 2.5 + 0.5/k
    std::vector<int64_t> ks = {1, 2, 4, 8, 16, 32};
    const CauchyTable t = cauchy_diagnostics(f, ks);
    for (size_t r = 0; r < ks.size(); ++r)
        CHECK(std::abs(t.coeff[r] - (2.5 + 0.5 / static_cast<double>(ks[r]))) <= 1e-14);
    // the coefficients converge monotonically to the tap sum 2.5
    for (size_t r = 0; r + 1 < ks.size(); ++r)
        CHECK(std::abs(t.coeff[r + 1] - 2.5) < std::abs(t.coeff[r] - 2.5));
}

TEST_CASE("symbolic and exact block averages agree on embedded fields") {
    SUBCASE("causal pair, one dimension") {
        const LinearFieldSpec f =
            make_field(1, {{MultiIndex(1, {0}), 1.0}, {MultiIndex(1, {1}), -0.5}});
        const ExactEmbedding emb = exact_embed(f, 5);
        for (int64_t k : {1, 2, 3}) {
            const LinearFieldSpec sym = blocking(f, k);
            const FunctionVec expected = embed_field(emb, sym.coeffs, 1.0);
            const FunctionVec got = blocking(emb.sys, emb.f, k);
            CHECK(linf(expected, got) <= 1e-12);
        }
    }
    SUBCASE("taps on both sides, one dimension") {
        const LinearFieldSpec f = make_field(1, {{MultiIndex(1, {-1}), 2.0},
                                                 {MultiIndex(1, {0}), 1.0},
                                                 {MultiIndex(1, {1}), -0.5}});
        const ExactEmbedding emb = exact_embed(f, 4);
        for (int64_t k : {1, 2}) {
            const LinearFieldSpec sym = blocking(f, k);
            const FunctionVec expected = embed_field(emb, sym.coeffs, 1.0);
            const FunctionVec got = blocking(emb.sys, emb.f, k);
            CHECK(linf(expected, got) <= 1e-12);
        }
    }
    SUBCASE("i.i.d. field, two dimensions") {
        const LinearFieldSpec f = make_field(2, {{zeros(2), 1.0}});
        const ExactEmbedding emb = exact_embed(f, 1);
        const FunctionVec got = blocking(emb.sys, emb.f, 1);
        CHECK(linf(emb.f, got) <= 1e-12);  // fixed point on the exact system too
    }
}

TEST_CASE("constructive martingale part matches the closed form on embeddings") {
    SUBCASE("causal pair") {
        const LinearFieldSpec f =
            make_field(1, {{MultiIndex(1, {0}), 1.0}, {MultiIndex(1, {1}), -0.5}});
        const ExactEmbedding emb = exact_embed(f, 5);
        CoeffMap delta;
        delta[zeros(1)] = 1.0;
        const FunctionVec omega0 = embed_field(emb, delta, 1.0);
        for (int64_t k : {1, 2, 3}) {
            const BlockedLinear sym = martingale_part(f, k);
            const BlockedExact ex = martingale_part(emb.sys, emb.f, k);
            FunctionVec expected = omega0;
            for (double& v : expected) v *= sym.coeff;
            CHECK(linf(ex.martingale, expected) <= 1e-12);
            CHECK(ex.decomposition.certified);
            CHECK(ex.decomposition.residual <= 1e-10);
            CHECK(linf(reconstruct(emb.sys, ex.decomposition), ex.result) <= 1e-10);
        }
    }
    SUBCASE("taps on both sides") {
        const LinearFieldSpec f = make_field(1, {{MultiIndex(1, {-1}), 2.0},
                                                 {MultiIndex(1, {0}), 1.0},
                                                 {MultiIndex(1, {1}), -0.5}});
        const ExactEmbedding emb = exact_embed(f, 4);
        CoeffMap delta;
        delta[zeros(1)] = 1.0;
        const FunctionVec omega0 = embed_field(emb, delta, 1.0);
        for (int64_t k : {1, 2}) {
            const BlockedLinear sym = martingale_part(f, k);
            const BlockedExact ex = martingale_part(emb.sys, emb.f, k);
            FunctionVec expected = omega0;
            for (double& v : expected) v *= sym.coeff;
            CHECK(linf(ex.martingale, expected) <= 1e-12);
            CHECK(ex.decomposition.certified);
            CHECK(ex.decomposition.residual <= 1e-10);
        }
    }
}

TEST_CASE("orthomartingale-difference inputs are fixed points of the average") {
    SUBCASE("one dimension") {
        const LinearFieldSpec base = make_field(1, {{zeros(1), 1.0}});
        const ExactEmbedding emb = exact_embed(base, 4);
        FunctionVec m(static_cast<size_t>(emb.sys.n));
        for (int a = 0; a < emb.sys.n; ++a)
            m[static_cast<size_t>(a)] =
                emb.omega(a, MultiIndex(1, {0})) * emb.omega(a, MultiIndex(1, {-1}));

        for (int64_t k : {1, 2, 3}) {
            CHECK(linf(blocking(emb.sys, m, k), m) <= 1e-12);
            const BlockedExact ex = martingale_part(emb.sys, m, k);
            CHECK(linf(ex.martingale, m) <= 1e-12);
            CHECK(ex.decomposition.certified);
            // every coboundary part vanishes
            for (unsigned mask = 1; mask < ex.decomposition.parts.size(); ++mask)
                CHECK(max_abs(ex.decomposition.parts[mask]) <= 1e-12);
        }
    }
    SUBCASE("two dimensions") {
        const LinearFieldSpec base = make_field(2, {{zeros(2), 1.0}});
        const ExactEmbedding emb = exact_embed(base, 1);
        FunctionVec m(static_cast<size_t>(emb.sys.n));
        for (int a = 0; a < emb.sys.n; ++a)
            m[static_cast<size_t>(a)] =
                emb.omega(a, MultiIndex(2, {0, 0})) * emb.omega(a, MultiIndex(2, {-1, -1}));

        CHECK(linf(blocking(emb.sys, m, 1), m) <= 1e-12);
        const BlockedExact ex = martingale_part(emb.sys, m, 1);
        CHECK(linf(ex.martingale, m) <= 1e-12);
        CHECK(ex.decomposition.certified);
        for (unsigned mask = 1; mask < ex.decomposition.parts.size(); ++mask)
            CHECK(max_abs(ex.decomposition.parts[mask]) <= 1e-12);
    }
}

TEST_CASE("random window functions decompose with certificates") {
    // Random centered functions of a small window of sign sites: they span
    // linear, martingale-difference, and coboundary content at once.
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    SUBCASE("one dimension") {
        const LinearFieldSpec base = make_field(1, {{zeros(1), 1.0}});
        const ExactEmbedding emb = exact_embed(base, 4);
        FunctionVec f(static_cast<size_t>(emb.sys.n));
        const double c1 = unif(gen), c2 = unif(gen), c3 = unif(gen);
        for (int a = 0; a < emb.sys.n; ++a) {
            const double wm1 = emb.omega(a, MultiIndex(1, {-1}));
            const double w0 = emb.omega(a, MultiIndex(1, {0}));
            f[static_cast<size_t>(a)] = c1 * wm1 + c2 * w0 + c3 * wm1 * w0;
        }

        for (int64_t k : {1, 2}) {
            const BlockedExact ex = martingale_part(emb.sys, f, k);
            CHECK(ex.decomposition.certified);
            CHECK(ex.decomposition.residual <= 1e-9);
            CHECK(linf(reconstruct(emb.sys, ex.decomposition), ex.result) <= 1e-9);
            // exact-route linearity
            FunctionVec f2 = f;
            for (double& v : f2) v *= 2.0;
            FunctionVec b2 = blocking(emb.sys, f2, k);
            FunctionVec b1 = blocking(emb.sys, f, k);
            for (double& v : b1) v *= 2.0;
            CHECK(linf(b1, b2) <= 1e-12);
        }
    }

    SUBCASE("two dimensions") {
        const LinearFieldSpec base = make_field(2, {{zeros(2), 1.0}});
        const ExactEmbedding emb = exact_embed(base, 1);
        FunctionVec f(static_cast<size_t>(emb.sys.n));
        const double c1 = unif(gen), c2 = unif(gen), c3 = unif(gen);
        for (int a = 0; a < emb.sys.n; ++a) {
            const double wm = emb.omega(a, MultiIndex(2, {-1, -1}));
            const double w0 = emb.omega(a, MultiIndex(2, {0, 0}));
            f[static_cast<size_t>(a)] = c1 * wm + c2 * w0 + c3 * wm * w0;
        }

        const BlockedExact ex = martingale_part(emb.sys, f, 1);
        CHECK(ex.decomposition.certified);
        CHECK(ex.decomposition.residual <= 1e-9);
        CHECK(linf(reconstruct(emb.sys, ex.decomposition), ex.result) <= 1e-9);
    }
}

TEST_CASE("invalid block inputs are rejected") {
    const LinearFieldSpec f = make_field(1, {{zeros(1), 1.0}});
    CHECK(field_kind_of([&] { blocking(f, 0); }) == FieldErrorKind::BadSpec);
    CHECK(field_kind_of([&] { cauchy_diagnostics(f, {4, 2}); }) == FieldErrorKind::BadSpec);
    CHECK(field_kind_of([&] { cauchy_diagnostics(f, {0}); }) == FieldErrorKind::BadSpec);

    const ExactEmbedding emb = exact_embed(f, 2);
    CHECK(sys_kind_of([&] { blocking(emb.sys, emb.f, 0); }) == SystemErrorKind::NotInDomain);
    FunctionVec shifted = emb.f;
    for (double& v : shifted) v += 0.25;  // no longer centered
    CHECK(sys_kind_of([&] { blocking(emb.sys, shifted, 1); }) == SystemErrorKind::NotInDomain);
    FunctionVec wrong(3, 0.0);
    CHECK(sys_kind_of([&] { blocking(emb.sys, wrong, 1); }) == SystemErrorKind::DimensionMismatch);
}
