#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orthofield/fieldmodels.hpp"
#include "orthofield/lattice.hpp"

namespace orthofield {

// ---------------------------------------------------------------------------
// Monte Carlo harness for rectangular partial sums of stationary random
// fields: prefix-sum evaluation, the interpolated partial-sum process,
// seeded estimates of the normalized maximum norm, and statistical checks of
// the martingale maximal bound, the dyadic maximal inequality, the blocking
// approximation error, and the Brownian-sheet limit.
//
// Every estimator is a pure function of (inputs, seed): replication r of a
// run with seed s draws its variates with derive_seed(s, r), and all sample
// aggregation uses pairwise summation, so results are bit-reproducible on
// every platform with IEEE doubles.
// ---------------------------------------------------------------------------

// Deterministic pairwise reduction (blocks of 8, then binary recursion);
// the pinned accumulation order behind every mean/variance in this module.
double pairwise_sum(const std::vector<double>& x);

// A Monte Carlo point estimate with its standard error.
struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int reps = 0;
    uint64_t seed = 0;
};

// --- rectangular partial sums ------------------------------------------------

// All partial sums S_i = sum_{1 <= j <= i} X_j for 1 <= i <= n, from one
// realization whose window covers [1, n].
struct PartialSumGrid {
    Box box;                 // [1, n]
    std::vector<double> sums;  // iterate_box order over box

    explicit PartialSumGrid(const Box& b) : box(b) {}
    double at(const MultiIndex& i) const { return sums[static_cast<size_t>(box_offset(box, i))]; }
    double max_abs() const;
};

// Axis-by-axis prefix sums, O(d |n|) total work.  Throws
// FieldError(BadSpec) if n is not >= 1 or the window does not cover [1, n].
PartialSumGrid partial_sums_all(const Realization& r, const MultiIndex& n);

// --- interpolated partial-sum process ---------------------------------------

// The process  t in [0,1]^d  ->  sum_{1<=i<=n} vol([0, n.t] cap R_i) X_i,
// where R_i is the unit cell (i-1, i]; per axis the cell weight is
// clamp(n_q t_q - (i_q - 1), 0, 1).  Evaluated on a uniform grid with
// `grid` points per axis (t = j/(grid-1), so 0 and 1 are always included)
// and divided by normalizer = sqrt(|n|).
struct PathProcess {
    MultiIndex n;
    int grid = 2;
    double normalizer = 1.0;
    std::vector<double> values;  // iterate_box order over [0, grid-1]^d

    double at(const MultiIndex& j) const;  // grid coordinates, 0 <= j <= grid-1
};

// Pre: grid >= 2, n >= 1, window covers [1, n]; FieldError(BadSpec) otherwise.
// The value at t = 1 equals S_n / normalizer exactly (no interpolation error).
PathProcess path_process(const Realization& r, const MultiIndex& n, int grid);

// --- normalized maximum norm -------------------------------------------------

// Estimates || max_{1<=i<=n} |S_i(f)| ||_{L2} / sqrt(|n|) from `reps`
// independent replications (rep r seeded with derive_seed(seed, r)):
// the square root of the mean of max^2/|n|, with a delta-method standard
// error.  Pre: reps >= 100 (FieldError BadSpec otherwise).
MCEstimate estimate_max_norm(const FieldSpec& spec, const MultiIndex& n, int reps, uint64_t seed);

// One point of the growth profile of the normalized maximum norm.
struct ProfilePoint {
    int p = 0;       // n = 2^p * (1,...,1)
    MultiIndex n;
    MCEstimate estimate;
};

// The profile p -> estimate_max_norm(spec, 2^p * 1) over an ascending list of
// exponents; point p uses the derived seed derive_seed(seed, p).  The profile
// is the finite-n surrogate for the limsup semi-norm: it stays bounded for
// martingale-difference inputs and decays for coboundary-type inputs.
std::vector<ProfilePoint> plus_norm_profile(const FieldSpec& spec, const std::vector<int>& p_range,
                                            int reps, uint64_t seed);

// --- martingale maximal bound ------------------------------------------------

// Checks the maximal bound for orthomartingale differences,
//   || max_{1<=i<=n} |S_i(m)| || <= 2^d ||m|| sqrt(|n|),
// by Monte Carlo: pass iff  estimate <= 2^d ||m|| (1 + 4 relative SE).
struct DoobReport {
    MultiIndex n;
    MCEstimate lhs;        // estimate of ||max |S_i||| / sqrt(|n|)
    double md_norm = 0.0;  // ||m||
    double bound = 0.0;    // 2^d ||m||
    double slack = 0.0;    // bound * (1 + 4 * relative SE)
    bool pass = false;
};
DoobReport verify_doob(const OrthoMDSpec& m, const MultiIndex& n, int reps, uint64_t seed);

// --- uniform integrability diagnostic -----------------------------------------

// Table of E[ Y 1{Y > R} ] for Y = max_{1<=i<=n} S_i^2 / |n| over a list of
// window sizes and thresholds; row a uses derive_seed(seed, a).  Entries are
// non-increasing in R by construction (same samples per row), and the R = 0
// column is the plain second-moment estimate.  A small envelope at large R
// across all n is the uniform-integrability evidence for the family.
struct UITable {
    std::vector<MultiIndex> n;
    std::vector<double> R;
    std::vector<std::vector<double>> value;  // value[a][b]: n_list[a], R_list[b]
};
UITable ui_diagnostic(const OrthoMDSpec& m, const std::vector<MultiIndex>& n_list,
                      const std::vector<double>& R_list, int reps, uint64_t seed);

// --- dyadic maximal inequality ------------------------------------------------

// Base values for the dimension recursion of the maximal-inequality
// constants; the defaults are the generous analytic choices.
struct DyadicConstants {
    double K1 = 6.0;  // K(1)
    double C1 = 6.0;  // C(1, {1})
};

// Constants generated by the recursion
//   K(d+1)          = 6 K(d)
//   C(d+1, J)       = 4 C(d, J)                          (J inside the old axes)
//   C(d+1, J+{new}) = 2 sqrt(2) C(d+1, J) + C(d, J)
//   C(d+1, {new})   = sqrt(2) K(d+1)
// from the configured base.  `overall` = max(K, all C) is the single packaged
// constant the empirical ratio is checked against.
struct ConstantSet {
    int d = 1;
    double K = 0.0;
    std::vector<double> C;  // indexed by DirectionSet mask; entry 0 unused
    double overall = 0.0;
};
ConstantSet recursion_constants(int d, const DyadicConstants& base = {});

struct DyadicRow {
    MultiIndex exponents;  // the dyadic exponent vector
    MultiIndex n;          // n = 2^exponents
    MCEstimate lhs;        // MC estimate of || max_{1<=i<=n} |S_i(f)| ||  (unnormalized)
    double rhs_middle = 0.0;  // sqrt(|n|) sum_{0<=i<=exp} 2^{-|i|/2} || sum_{0<=j<=2^i} P_E^j f ||
    double ratio = 0.0;       // lhs.mean / rhs_middle
};

// Empirical check of the two-bound chain for the dyadic maximal inequality on
// a field in the E direction space:
//   || max |S_i| ||  <=  C(d) * rhs_middle  <=  C(d)^2 * sqrt(|n|) * series,
// where `series` is the |n|^{-3/2}-weighted projection series (the summand of
// the projective-summability criterion), evaluated with a certified bracket
// [series_lower, series_lower + series_tail].  `ratio_bounded` checks every
// empirical ratio against constants.overall; `second_dominates` checks the
// second bound against the first using the sound lower end of the bracket:
//   constants.overall * series_lower >= rhs_middle / sqrt(|n|)  for all rows.
struct DyadicReport {
    DirectionSet E;
    ConstantSet constants;
    std::vector<DyadicRow> rows;       // exponents iterate over [0, n_dyadic]
    double series_lower = 0.0;         // truncated |n|^{-3/2}-weighted series
    double series_tail = 0.0;          // certified bound on the rest
    double middle_max = 0.0;           // max over rows of rhs_middle / sqrt(|n|)
    bool ratio_bounded = false;
    bool second_dominates = false;
    bool pass = false;
};

// Pre: the coefficient support certifies membership in the E direction space
// (every index in the region with u_q <= -1 on E, u_q >= 0 off E); throws
// FieldError(MembershipFailed) otherwise.  Row r uses derive_seed(seed, r).
DyadicReport verify_dyadic_maximal(const LinearFieldSpec& f, const DirectionSet& E,
                                   const MultiIndex& n_dyadic, int reps, uint64_t seed,
                                   const DyadicConstants& base = {});

// --- blocking approximation error ---------------------------------------------

// Estimates || max_{1<=i<=n} |S_i(f - m_k)| || / sqrt(|n|), where m_k is the
// martingale part of the k-blocked field.  Since f - m_k is again a linear
// field of the same innovations (its coefficient at 0 is reduced by the
// martingale coefficient), sampling the difference spec IS joint sampling of
// f and m_k on shared innovations.  Exactly zero for martingale inputs.
MCEstimate approx_error(const LinearFieldSpec& f, int64_t k, const MultiIndex& n, int reps,
                        uint64_t seed);

// --- Brownian sheet ------------------------------------------------------------

// One sheet path on the uniform grid {j/(grid-1)}^d: i.i.d. N(0, cell volume)
// increments per cell, prefix-summed; any grid point with a zero coordinate
// is exactly 0.  Bit-reproducible in (d, grid, seed).
struct SheetPath {
    int d = 1;
    int grid = 2;
    std::vector<double> values;  // iterate_box order over [0, grid-1]^d

    double at(const MultiIndex& j) const;  // grid coordinates
};
SheetPath simulate_sheet(int d, int grid, uint64_t seed);

// Empirical covariance check at diagonal arguments t = alpha 1, s = beta 1
// for alpha, beta in {0.2, 0.4, 0.6, 0.8, 1.0} against prod_q min(t_q, s_q)
// = min(alpha, beta)^d.  Pre: grid - 1 divisible by 5, reps >= 100.
struct SheetCovRow {
    double alpha = 0.0, beta = 0.0;
    double theory = 0.0;
    double empirical = 0.0;
    double z = 0.0;  // (empirical - theory) / SE
};
struct SheetCovReport {
    int d = 1;
    int grid = 2;
    int reps = 0;
    std::vector<SheetCovRow> rows;
    double worst_abs_z = 0.0;
    bool pass = false;  // all |z| <= 4
};
SheetCovReport sheet_cov_check(int d, int grid, int reps, uint64_t seed);

// --- functional CLT -----------------------------------------------------------

enum class PathFunctional { Endpoint, SupAbs };
const char* functional_name(PathFunctional f);

// Two-sample Kolmogorov-Smirnov comparison between `reps` replications of
// functional(S_n(f, .) / (sigma sqrt(|n|))) and `reps` replications of the
// same functional of a simulated Brownian sheet, where sigma = |sum_i a_i| sd.
// Endpoint: the value at t = 1.  SupAbs: the maximum absolute value over the
// lattice (field) resp. the grid (sheet, max(n_q)+1 points per axis).
// p-value from the asymptotic Kolmogorov distribution with effective sample
// size reps/2; pass iff p > 0.01.  Throws FieldError(DegenerateScale) when
// sigma = 0 (coboundary-type field: the endpoint distribution collapses).
struct KSReport {
    PathFunctional functional = PathFunctional::Endpoint;
    MultiIndex n;
    int reps = 0;
    uint64_t seed = 0;
    double sigma = 0.0;
    double statistic = 0.0;
    double p_value = 0.0;
    bool pass = false;
    std::string warning;  // set when the summability criteria are not certified
};
KSReport fclt_ks(const LinearFieldSpec& f, const MultiIndex& n, int reps,
                 PathFunctional functional, uint64_t seed);

}  // namespace orthofield
