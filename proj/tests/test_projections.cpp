#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "orthofield/exactsys.hpp"
#include "orthofield/fieldmodels.hpp"
#include "orthofield/projections.hpp"

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

bool same_coeffs(const CoeffMap& a, const CoeffMap& b, double tol = 0.0) {
    if (a.size() != b.size()) return false;
    for (const auto& [k, v] : a) {
        const auto it = b.find(k);
        if (it == b.end()) return false;
        if (std::abs(it->second - v) > tol) return false;
    }
    return true;
}

double linf(const FunctionVec& a, const FunctionVec& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("stage transforms on the i.i.d. coefficient") {
    const LinearFieldSpec f = make_field(1, {{MultiIndex(1, {0}), 1.0}});

    // the adapted component at stage zero is the field itself
    const ProjectedField p0 = linear_PE(f, empty_set(1), zeros(1));
    CHECK(same_coeffs(p0.base.coeffs, f.coeffs));

    // the direction component never reaches the origin coefficient
    for (int64_t i = 0; i <= 3; ++i) {
        const ProjectedField p = linear_PE(f, full_set(1), MultiIndex(1, {i}));
        CHECK(p.base.coeffs.empty());
    }

    // stages >= 1 of the adapted component vanish as well
    const ProjectedField p1 = linear_PE(f, empty_set(1), MultiIndex(1, {1}));
    CHECK(p1.base.coeffs.empty());

    CHECK_THROWS_AS(linear_PE(f, empty_set(1), MultiIndex(1, {-1})), FieldError);
}

TEST_CASE("projector coefficients are plain lookups") {
    const LinearFieldSpec f = make_field(1, {{MultiIndex(1, {0}), 2.0}, {MultiIndex(1, {1}), 3.0}});
    CHECK(linear_pi(f, MultiIndex(1, {0})) == 2.0);
    CHECK(linear_pi(f, MultiIndex(1, {-1})) == 3.0);  // the eps_{-1} term carries coefficient a_1 = 3
    CHECK(linear_pi(f, MultiIndex(1, {1})) == 0.0);
    CHECK(linear_pi(f, MultiIndex(1, {5})) == 0.0);

    // sum of projector norms equals sd * sum |a|
    double s = 0.0;
    for (int64_t j = -8; j <= 8; ++j) s += std::abs(linear_pi(f, MultiIndex(1, {j})));
    CHECK(s == 5.0);
}

TEST_CASE("stage-zero components partition any coefficient map") {
    // noncausal field: taps on both sides in both axes
    const LinearFieldSpec f = make_field(2, {{MultiIndex(2, {0, 0}), 1.0},
                                             {MultiIndex(2, {1, -1}), -0.5},
                                             {MultiIndex(2, {-1, 2}), 0.25},
                                             {MultiIndex(2, {-2, -1}), 0.125}});
    CoeffMap total;
    for (const auto& E : all_direction_sets(2)) {
        const ProjectedField p = linear_PE(f, E, zeros(2));
        for (const auto& [u, v] : p.base.coeffs) total[u] += v;
        // contraction at stage zero
        CHECK(field_l2_norm(p.base) <= field_l2_norm(f) + 1e-15);
    }
    CHECK(same_coeffs(total, f.coeffs));
}

TEST_CASE("stage semigroup holds coefficientwise") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    LinearFieldSpec f;
    f.d = 2;
    f.innovation = {InnovationLaw::Rademacher, 1.0};
    iterate_box(Box(MultiIndex(2, {-2, -2}), MultiIndex(2, {2, 2})), [&](const MultiIndex& t) {
        const double v = U(rng);
        if (std::abs(v) > 0.05) f.coeffs[t] = v;  // keep magnitudes well above the drop tolerance
    });

    for (const auto& E : all_direction_sets(2)) {
        for (const auto& [j, k] : std::vector<std::pair<MultiIndex, MultiIndex>>{
                 {MultiIndex(2, {1, 0}), MultiIndex(2, {0, 1})},
                 {MultiIndex(2, {1, 1}), MultiIndex(2, {2, 0})},
                 {MultiIndex(2, {0, 0}), MultiIndex(2, {1, 2})}}) {
            const ProjectedField two_step = linear_PE(linear_PE(f, E, k), E, j);
            const ProjectedField one_step = linear_PE(f, E, j + k);
            CHECK(same_coeffs(two_step.base.coeffs, one_step.base.coeffs));
        }
    }
}

TEST_CASE("symbolic stages match the exact system operators (one dimension)") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        LinearFieldSpec f;
        f.d = 1;
        f.innovation = {InnovationLaw::Rademacher, 1.0};
        for (int64_t t = -1; t <= 1; ++t) f.coeffs[MultiIndex(1, {t})] = U(rng);

        const ExactEmbedding emb = exact_embed(f, 2);
        // shifted support stays within the torus radius for stages 0 and 1
        for (int64_t i = 0; i <= 1; ++i) {
            for (const auto& E : all_direction_sets(1)) {
                const ProjectedField sym = linear_PE(f, E, MultiIndex(1, {i}));
                const FunctionVec exact = apply_PE(emb.sys, E, MultiIndex(1, {i}), emb.f);
                const FunctionVec embedded = embed_field(emb, sym.base.coeffs, f.innovation.sd);
                CHECK(linf(exact, embedded) <= 1e-12);
            }
        }
    }
}

TEST_CASE("symbolic stages match the exact system operators (two dimensions)") {
    const LinearFieldSpec delta = make_field(2, {{MultiIndex(2, {0, 0}), 1.0}});
    const ExactEmbedding emb = exact_embed(delta, 1);

    for (const auto& E : all_direction_sets(2)) {
        for (const auto& i : {MultiIndex(2, {0, 0}), MultiIndex(2, {1, 0}), MultiIndex(2, {0, 1}),
                              MultiIndex(2, {1, 1})}) {
            const ProjectedField sym = linear_PE(delta, E, i);
            const FunctionVec exact = apply_PE(emb.sys, E, i, emb.f);
            const FunctionVec embedded = embed_field(emb, sym.base.coeffs, 1.0);
            CHECK(linf(exact, embedded) <= 1e-12);
        }
    }

    // random support within the radius, stage zero
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    LinearFieldSpec g;
    g.d = 2;
    g.innovation = {InnovationLaw::Rademacher, 1.0};
    for (const auto& t : {MultiIndex(2, {0, 0}), MultiIndex(2, {1, 0}), MultiIndex(2, {0, 1}),
                          MultiIndex(2, {1, 1}), MultiIndex(2, {-1, 1}), MultiIndex(2, {0, -1})})
        g.coeffs[t] = U(rng);
    const FunctionVec gf = embed_field(emb, g.coeffs, 1.0);
    for (const auto& E : all_direction_sets(2)) {
        const ProjectedField sym = linear_PE(g, E, zeros(2));
        const FunctionVec exact = apply_PE(emb.sys, E, zeros(2), gf);
        const FunctionVec embedded = embed_field(emb, sym.base.coeffs, 1.0);
        CHECK(linf(exact, embedded) <= 1e-12);
    }
}

TEST_CASE("summed-stage norm: closed forms and the exact oracle") {
    const LinearFieldSpec delta1 = make_field(1, {{MultiIndex(1, {0}), 1.0}}, InnovationLaw::StandardNormal, 1.5);
    for (int64_t n = 1; n <= 6; ++n) {
        CHECK(sum_PE_norm(delta1, empty_set(1), MultiIndex(1, {n})) == doctest::Approx(1.5).epsilon(1e-14));
        CHECK(sum_PE_norm(delta1, full_set(1), MultiIndex(1, {n})) == 0.0);
    }

    // telescoping pair: sum over i<2 leaves a single unit coefficient
    const LinearFieldSpec tele =
        make_field(1, {{MultiIndex(1, {0}), 1.0}, {MultiIndex(1, {1}), -1.0}}, InnovationLaw::StandardNormal, 2.0);
    CHECK(sum_PE_norm(tele, empty_set(1), MultiIndex(1, {2})) == doctest::Approx(2.0).epsilon(1e-14));

    CHECK_THROWS_AS(sum_PE_norm(delta1, empty_set(1), MultiIndex(1, {0})), FieldError);

    // exact-system cross-check, one dimension
    const LinearFieldSpec f =
        make_field(1, {{MultiIndex(1, {0}), 0.8}, {MultiIndex(1, {1}), -0.6}}, InnovationLaw::Rademacher, 1.0);
    const ExactEmbedding emb = exact_embed(f, 2);
    for (const auto& E : all_direction_sets(1)) {
        const MultiIndex n(1, {2});
        FunctionVec acc(static_cast<size_t>(emb.sys.n), 0.0);
        for (int64_t i = 0; i <= 1; ++i) {
            const FunctionVec p = apply_PE(emb.sys, E, MultiIndex(1, {i}), emb.f);
            for (size_t a = 0; a < acc.size(); ++a) acc[a] += p[a];
        }
        CHECK(sum_PE_norm(f, E, n) == doctest::Approx(emb.sys.norm(acc)).epsilon(1e-12));
    }

    // exact-system cross-check, two dimensions
    const LinearFieldSpec delta2 = make_field(2, {{MultiIndex(2, {0, 0}), 1.0}});
    const ExactEmbedding emb2 = exact_embed(delta2, 1);
    for (const auto& E : all_direction_sets(2)) {
        FunctionVec acc(static_cast<size_t>(emb2.sys.n), 0.0);
        iterate_box(Box(zeros(2), ones(2)), [&](const MultiIndex& i) {
            const FunctionVec p = apply_PE(emb2.sys, E, i, emb2.f);
            for (size_t a = 0; a < acc.size(); ++a) acc[a] += p[a];
        });
        CHECK(sum_PE_norm(delta2, E, MultiIndex(2, {2, 2})) ==
              doctest::Approx(emb2.sys.norm(acc)).epsilon(1e-12));
    }
}

TEST_CASE("coefficient table CSV is stable and lossless") {
    const LinearFieldSpec f =
        make_field(2, {{MultiIndex(2, {0, 0}), 1.0}, {MultiIndex(2, {1, -2}), -0.125}});
    CHECK(coeff_csv(f) == "i1,i2,value\n0,0,1\n1,-2,-0.125\n");

    // a value needing full precision survives the round trip textually
    const LinearFieldSpec g = make_field(1, {{MultiIndex(1, {0}), 0.1}});
    CHECK(coeff_csv(g) == "i1,value\n0,0.10000000000000001\n");
}

TEST_CASE("lineage strings describe the composition") {
    const LinearFieldSpec f = make_field(2, {{MultiIndex(2, {0, 0}), 1.0}});
    const ProjectedField p = linear_PE(f, DirectionSet(2, 1u), MultiIndex(2, {1, 0}));
    CHECK(p.lineage == "PE[E={1},i=(1,0)]");
    const ProjectedField pp = linear_PE(p, DirectionSet(2, 1u), MultiIndex(2, {2, 0}));
    CHECK(pp.lineage == "PE[E={1},i=(2,0)] o PE[E={1},i=(1,0)]");
}
