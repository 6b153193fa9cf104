#pragma once

#include <string>
#include <vector>

#include "orthofield/fieldmodels.hpp"
#include "orthofield/lattice.hpp"

namespace orthofield {

// ---------------------------------------------------------------------------
// Numeric checkers for the projective summability conditions on finite-support
// linear fields.  Verdicts are certified: a series is reported "satisfied"
// only together with an explicit bound on everything beyond the truncation.
// ---------------------------------------------------------------------------

enum class Verdict { Satisfied, Violated, Inconclusive };
const char* verdict_name(Verdict v);

struct SeriesRow {
    DirectionSet E;
    double partial_sum = 0.0;   // exact sum over the truncation box
    double tail_bound = 0.0;    // certified upper bound for the rest of the series
    double sup_constant = 0.0;  // per-field constant sup_n ||sum_{0<=i<=n-1} P_E^i f||
};

struct CriterionReport {
    std::string name;
    std::vector<SeriesRow> rows;  // one per direction set (single row for the projector sum)
    int64_t truncation = 0;       // per-coordinate truncation point of the partial sums
    Verdict verdict = Verdict::Inconclusive;
    std::string note;
};

// zeta(3/2) to full double precision (direct summation plus an
// Euler-Maclaurin tail); pinned against the literature value in tests.
double zeta_three_halves();

// Summability of the commuting-projector norms: sum_j ||pi_j f|| = sd * sum_i |a_i|,
// exact for finite support.
CriterionReport hannan_check(const LinearFieldSpec& field);

// The quadratic form whose square root is ||sum_{0<=k<=n-1} P_E^k f|| / sd:
//   Delta_{E,n} = sum_{u in region(E)} ( sum_{0<=k<=n-1} a_{u + k*eps(E)} )^2,
// evaluated directly from the definition (independently of the coefficient
// accumulation in sum_PE_norm, which it is tested against).
double delta_En(const LinearFieldSpec& field, const DirectionSet& E, const MultiIndex& n);

// Per-axis point beyond which sum_PE_norm(field, E, n) is constant in each
// coordinate (support exhaustion); used for the tail certificates.
MultiIndex series_stabilization_point(const LinearFieldSpec& field);

// The weighted projection series sum_{n>=1} |n|^{-3/2} ||sum_{0<=i<=n-1} P_E^i f||
// for every direction set E, truncated at N_max per coordinate, with a
// certified closed-form tail bound (pre: N_max >= 4).
CriterionReport mw_check(const LinearFieldSpec& field, int64_t N_max = 32);

}  // namespace orthofield
